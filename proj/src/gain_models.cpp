#include "sigtrade/gain_models.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>

namespace sigtrade::gain {

struct GainModel::EmpiricalData {
    std::vector<double> quantile;  // threshold at p_k = k / (knots - 1)
    std::vector<double> gain;      // g(p_k)
    std::vector<SignalDraw> pool;  // centered rows; empty when loaded from JSON
    MonotonicityReport monotonicity;
    bool drift_warning = false;
    std::size_t sample_count = 0;
};

namespace {

void require_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
        throw DomainError(std::string(what) + ": probability " + std::to_string(p) +
                          " outside [0, 1]");
}

double interpolate_table(const std::vector<double>& table, double p) {
    const double x = p * static_cast<double>(table.size() - 1);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(x), table.size() - 2);
    const double w = x - static_cast<double>(k);
    return table[k] + w * (table[k + 1] - table[k]);
}

double knot(std::size_t k) {
    return static_cast<double>(k) / static_cast<double>(kEmpiricalKnots - 1);
}

// Quantile of a sorted sample with midpoint plotting positions (i + 1/2) / n.
double midpoint_quantile(const std::vector<double>& sorted, double level) {
    const double n = static_cast<double>(sorted.size());
    const double x = std::clamp(level * n - 0.5, 0.0, n - 1.0);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(x), sorted.size() - 2);
    const double w = x - static_cast<double>(i);
    return sorted[i] + w * (sorted[i + 1] - sorted[i]);
}

MonotonicityReport check_absolute_gain(const std::vector<double>& gain_table, double price_sd,
                                       std::size_t n) {
    MonotonicityReport report;
    constexpr int kCoarse = 20;
    for (int j = 1; j <= kCoarse; ++j) {
        const double p = static_cast<double>(j) / kCoarse;
        report.p.push_back(p);
        report.absolute_gain.push_back(interpolate_table(gain_table, p) / p);
        report.standard_error.push_back(price_sd / std::sqrt(p * static_cast<double>(n)));
    }
    for (std::size_t j = 1; j < report.p.size(); ++j) {
        const double tol = 3.0 * std::hypot(report.standard_error[j], report.standard_error[j - 1]);
        if (report.absolute_gain[j] > report.absolute_gain[j - 1] + tol) report.non_increasing = false;
    }
    return report;
}

} // namespace

GainModel GainModel::linear_uniform(double slope, double noise_sd) {
    if (!std::isfinite(slope) || slope < 0.0)
        throw DomainError("linear_uniform: slope must be finite and non-negative");
    if (!std::isfinite(noise_sd) || noise_sd < 0.0)
        throw DomainError("linear_uniform: noise_sd must be finite and non-negative");
    GainModel m;
    m.kind_ = GainKind::LinearUniform;
    m.slope_ = slope;
    m.noise_sd_ = noise_sd;
    return m;
}

GainModel GainModel::quadratic(double scale, double noise_sd) {
    return linear_uniform(2.0 * scale, noise_sd);
}

double GainModel::scale() const {
    if (kind_ != GainKind::LinearUniform) throw DomainError("scale: model is not quadratic");
    return 0.5 * slope_;
}

double GainModel::gain(double p) const {
    require_probability(p, "gain");
    if (kind_ == GainKind::LinearUniform) return 0.5 * slope_ * p * (1.0 - p);
    return interpolate_table(empirical_->gain, p);
}

double GainModel::threshold(double p) const {
    require_probability(p, "threshold");
    if (kind_ == GainKind::LinearUniform) return 0.5 - p;
    return interpolate_table(empirical_->quantile, p);
}

double GainModel::absolute_gain(double p) const {
    require_probability(p, "absolute_gain");
    if (kind_ == GainKind::LinearUniform) return 0.5 * slope_ * (1.0 - p);
    if (p == 0.0) return empirical_->gain[1] / knot(1);
    return gain(p) / p;
}

bool GainModel::symmetric(double tol) const {
    if (kind_ == GainKind::LinearUniform) return true;
    const auto& g = empirical_->gain;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (std::abs(g[k] - g[g.size() - 1 - k]) > tol) return false;
    return true;
}

bool GainModel::has_sampler() const {
    return kind_ == GainKind::LinearUniform || !empirical_->pool.empty();
}

SignalDraw GainModel::sample(Rng& rng) const {
    if (kind_ == GainKind::LinearUniform) {
        std::uniform_real_distribution<double> uniform(-0.5, 0.5);
        SignalDraw d;
        d.signal = uniform(rng);
        d.price_change = slope_ * d.signal;
        if (noise_sd_ > 0.0) d.price_change += std::normal_distribution<double>(0.0, noise_sd_)(rng);
        return d;
    }
    const auto& pool = empirical_->pool;
    if (pool.empty()) throw DomainError("sample: empirical model has no stored sample pool");
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    return pool[pick(rng)];
}

std::span<const double> GainModel::quantile_table() const {
    if (!empirical_) return {};
    return empirical_->quantile;
}

std::span<const double> GainModel::gain_table() const {
    if (!empirical_) return {};
    return empirical_->gain;
}

const MonotonicityReport& GainModel::monotonicity() const {
    static const MonotonicityReport kAnalytic{};
    return empirical_ ? empirical_->monotonicity : kAnalytic;
}

bool GainModel::well_designed() const {
    return kind_ == GainKind::LinearUniform || empirical_->monotonicity.non_increasing;
}

bool GainModel::drift_warning() const {
    return empirical_ && empirical_->drift_warning;
}

std::size_t GainModel::sample_count() const {
    return empirical_ ? empirical_->sample_count : 0;
}

nlohmann::json GainModel::to_json() const {
    nlohmann::json j;
    if (kind_ == GainKind::LinearUniform) {
        j["kind"] = "linear_uniform";
        j["slope"] = slope_;
        j["scale"] = 0.5 * slope_;
        j["noise_sd"] = noise_sd_;
        return j;
    }
    j["kind"] = "empirical";
    j["sample_count"] = empirical_->sample_count;
    j["drift_warning"] = empirical_->drift_warning;
    j["well_designed"] = empirical_->monotonicity.non_increasing;
    j["grid_size"] = empirical_->gain.size();
    j["quantile_table"] = empirical_->quantile;
    j["gain_table"] = empirical_->gain;
    nlohmann::json check = nlohmann::json::array();
    const auto& mono = empirical_->monotonicity;
    for (std::size_t k = 0; k < mono.p.size(); ++k)
        check.push_back({{"p", mono.p[k]}, {"absolute_gain", mono.absolute_gain[k]},
                         {"standard_error", mono.standard_error[k]}});
    j["absolute_gain_check"] = check;
    return j;
}

GainModel GainModel::from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "linear_uniform") {
        if (j.contains("slope"))
            return linear_uniform(j.at("slope").get<double>(), j.value("noise_sd", 0.0));
        return quadratic(j.at("scale").get<double>(), j.value("noise_sd", 0.0));
    }
    if (kind != "empirical") throw DomainError("from_json: unknown model kind '" + kind + "'");
    auto data = std::make_shared<EmpiricalData>();
    data->quantile = j.at("quantile_table").get<std::vector<double>>();
    data->gain = j.at("gain_table").get<std::vector<double>>();
    if (data->quantile.size() < 2 || data->quantile.size() != data->gain.size())
        throw DomainError("from_json: empirical tables must have equal size >= 2");
    data->sample_count = j.value("sample_count", std::size_t{0});
    data->drift_warning = j.value("drift_warning", false);
    if (j.contains("absolute_gain_check")) {
        for (const auto& row : j.at("absolute_gain_check")) {
            data->monotonicity.p.push_back(row.at("p").get<double>());
            data->monotonicity.absolute_gain.push_back(row.at("absolute_gain").get<double>());
            data->monotonicity.standard_error.push_back(row.value("standard_error", 0.0));
        }
    }
    data->monotonicity.non_increasing = j.value("well_designed", true);
    GainModel m;
    m.kind_ = GainKind::Empirical;
    m.empirical_ = std::move(data);
    return m;
}

GainModel empirical_from_samples(std::span<const SignalDraw> rows) {
    const std::size_t n = rows.size();
    if (n < kMinEmpiricalRows)
        throw DomainError("empirical_from_samples: need at least " +
                          std::to_string(kMinEmpiricalRows) + " rows, got " + std::to_string(n));
    const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(),
        [](const SignalDraw& a, const SignalDraw& b) { return a.signal < b.signal; });
    if (!(lo->signal < hi->signal))
        throw DomainError("empirical_from_samples: constant signal, quantile map is not a bijection");

    CompensatedSum sum;
    for (const auto& r : rows) sum.add(r.price_change);
    const double mean = sum.value() / static_cast<double>(n);
    CompensatedSum sq;
    for (const auto& r : rows) sq.add((r.price_change - mean) * (r.price_change - mean));
    const double sd = std::sqrt(sq.value() / static_cast<double>(n - 1));

    auto data = std::make_shared<GainModel::EmpiricalData>();
    data->sample_count = n;
    data->drift_warning = std::abs(mean) > 3.0 * sd / std::sqrt(static_cast<double>(n));
    data->pool.reserve(n);
    for (const auto& r : rows) data->pool.push_back({r.signal, r.price_change - mean});

    // Descending by signal: the top c rows are those a threshold with p = c/n trades on.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data->pool[a].signal > data->pool[b].signal;
    });
    std::vector<double> prefix(n + 1, 0.0);
    CompensatedSum running;
    for (std::size_t i = 0; i < n; ++i) {
        running.add(data->pool[order[i]].price_change);
        prefix[i + 1] = running.value();
    }
    std::vector<double> sorted_signal(n);
    for (std::size_t i = 0; i < n; ++i) sorted_signal[i] = data->pool[order[n - 1 - i]].signal;

    data->quantile.resize(kEmpiricalKnots);
    data->gain.resize(kEmpiricalKnots);
    const double dn = static_cast<double>(n);
    for (std::size_t k = 0; k < kEmpiricalKnots; ++k) {
        const double p = knot(k);
        data->quantile[k] = midpoint_quantile(sorted_signal, 1.0 - p);
        const double c = p * dn;
        const auto c0 = std::min<std::size_t>(static_cast<std::size_t>(c), n - 1);
        const double w = c - static_cast<double>(c0);
        data->gain[k] = (prefix[c0] + w * (prefix[c0 + 1] - prefix[c0])) / dn;
    }
    data->gain.front() = 0.0;
    data->gain.back() = 0.0;  // exact after centering
    data->monotonicity = check_absolute_gain(data->gain, sd, n);

    GainModel m;
    m.kind_ = GainKind::Empirical;
    m.empirical_ = std::move(data);
    return m;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_field(std::string_view s, std::size_t line) {
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw DomainError("samples csv line " + std::to_string(line) + ": bad number '" +
                          std::string(s) + "'");
    return v;
}

} // namespace

std::vector<SignalDraw> parse_samples_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DomainError("samples csv: empty input, header row required");
    const auto header = trim(line);
    const auto comma = header.find(',');
    if (comma == std::string_view::npos || trim(header.substr(0, comma)) != "signal" ||
        trim(header.substr(comma + 1)) != "price_change")
        throw DomainError("samples csv: header must be 'signal,price_change'");
    std::vector<SignalDraw> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto c = body.find(',');
        if (c == std::string_view::npos)
            throw DomainError("samples csv line " + std::to_string(lineno) + ": expected two columns");
        rows.push_back({parse_field(body.substr(0, c), lineno), parse_field(body.substr(c + 1), lineno)});
    }
    return rows;
}

std::vector<SignalDraw> read_samples_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open samples file " + path.string());
    return parse_samples_csv(in);
}

} // namespace sigtrade::gain
