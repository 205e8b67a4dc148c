#include "rareis/cli.hpp"

#include "rareis/error.hpp"
#include "rareis/oracle.hpp"
#include "rareis/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace rareis {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
    text = trim(text);
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) return std::nullopt;
    return value;
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.5e", v);
    return buf;
}

std::string sci(const std::optional<double>& v) { return v ? sci(*v) : std::string{}; }

std::vector<double> default_thresholds() {
    return {0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40};
}

}  // namespace

std::string_view method_name(SamplerMethod method) {
    switch (method) {
        case SamplerMethod::mc: return "mc";
        case SamplerMethod::is1d: return "is1d";
        case SamplerMethod::is_hom: return "is-hom";
        case SamplerMethod::is_astar: return "is-astar";
    }
    return "unknown";
}

SamplerMethod parse_method(std::string_view name) {
    for (auto m : {SamplerMethod::mc, SamplerMethod::is1d, SamplerMethod::is_hom,
                   SamplerMethod::is_astar}) {
        if (method_name(m) == name) return m;
    }
    throw ConfigError("unknown sampler method '" + std::string(name) +
                      "' (expected mc, is1d, is-hom or is-astar)");
}

PolicyVariant policy_variant(SamplerMethod method) {
    switch (method) {
        case SamplerMethod::mc: return PolicyVariant::none;
        case SamplerMethod::is1d: return PolicyVariant::optimal_1d;
        case SamplerMethod::is_hom: return PolicyVariant::homogeneous;
        case SamplerMethod::is_astar: return PolicyVariant::a_star_majorant;
    }
    return PolicyVariant::none;
}

ModelSpec RunConfig::model_at(double z) const {
    ModelSpec spec = model;
    spec.threshold = z;
    spec.validate();
    return spec;
}

RunConfig parse_config(std::istream& in, std::string_view source) {
    std::map<std::string, std::pair<std::string, int>> entries;
    std::string line;
    int line_no = 0;
    auto fail = [&](int where, const std::string& message) -> ConfigError {
        return ConfigError(std::string(source) + ":" + std::to_string(where) + ": " + message);
    };
    static const std::vector<std::string> kKeys = {
        "model.d",   "model.n",        "model.a",   "model.w",     "model.b",
        "horizon",   "threshold",      "sampler.method", "sampler.c", "run.batches",
        "run.samples", "run.seed",     "run.workers"};

    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) {
            view = view.substr(0, hash);
        }
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) throw fail(line_no, "expected 'key = value'");
        const std::string key(trim(view.substr(0, eq)));
        const std::string value(trim(view.substr(eq + 1)));
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
            throw fail(line_no, "unknown key '" + key + "'");
        }
        if (entries.count(key)) throw fail(line_no, "duplicate key '" + key + "'");
        if (value.empty()) throw fail(line_no, "missing value for '" + key + "'");
        entries[key] = {value, line_no};
    }

    auto list = [&](const std::string& key) -> std::optional<std::vector<double>> {
        const auto it = entries.find(key);
        if (it == entries.end()) return std::nullopt;
        std::vector<double> values;
        for (auto part : split(it->second.first, ',')) {
            const auto v = parse_number<double>(part);
            if (!v) throw fail(it->second.second, "malformed number in '" + key + "'");
            values.push_back(*v);
        }
        return values;
    };
    auto scalar = [&](const std::string& key) -> std::optional<double> {
        auto values = list(key);
        if (!values) return std::nullopt;
        if (values->size() != 1) throw fail(entries[key].second, "'" + key + "' takes one value");
        return values->front();
    };
    auto integer = [&](const std::string& key) -> std::optional<long long> {
        const auto it = entries.find(key);
        if (it == entries.end()) return std::nullopt;
        const auto v = parse_number<long long>(it->second.first);
        if (!v) throw fail(it->second.second, "'" + key + "' must be an integer");
        return v;
    };
    auto line_of = [&](const std::string& key) {
        const auto it = entries.find(key);
        return it == entries.end() ? 0 : it->second.second;
    };

    RunConfig config;
    const auto d = integer("model.d");
    auto rates = list("model.a");
    auto weights = list("model.w");
    std::size_t groups = 1;
    if (d) {
        if (*d < 1) throw fail(line_of("model.d"), "model.d must be positive");
        groups = static_cast<std::size_t>(*d);
    } else if (weights) {
        groups = weights->size();
    } else if (rates) {
        groups = rates->size();
    }
    if (!rates) rates = std::vector<double>{0.01};
    if (rates->size() == 1 && groups > 1) rates->assign(groups, rates->front());
    if (!weights) weights = std::vector<double>(groups, 1.0 / static_cast<double>(groups));
    if (rates->size() != groups) {
        throw fail(line_of("model.a"), "model.a has " + std::to_string(rates->size()) +
                                           " entries, expected " + std::to_string(groups));
    }
    if (weights->size() != groups) {
        throw fail(line_of("model.w"), "model.w has " + std::to_string(weights->size()) +
                                           " entries, expected " + std::to_string(groups));
    }
    config.model.rates = *rates;
    config.model.weights = *weights;
    config.model.contagion = scalar("model.b").value_or(0.0);
    const auto n = integer("model.n").value_or(125);
    if (n < 1 || n > 1'000'000'000) throw fail(line_of("model.n"), "model.n out of range");
    config.model.population = static_cast<int>(n);
    config.model.horizon = scalar("horizon").value_or(5.0);
    config.thresholds = list("threshold").value_or(default_thresholds());
    config.model.threshold = config.thresholds.front();

    if (const auto it = entries.find("sampler.method"); it != entries.end()) {
        try {
            config.method = parse_method(it->second.first);
        } catch (const ConfigError& e) {
            throw fail(it->second.second, e.what());
        }
    }
    config.energy_override = scalar("sampler.c");
    config.batches = static_cast<int>(integer("run.batches").value_or(100));
    config.samples = static_cast<int>(integer("run.samples").value_or(5000));
    const auto seed = integer("run.seed").value_or(1);
    if (seed < 0) throw fail(line_of("run.seed"), "run.seed must be nonnegative");
    config.seed = static_cast<std::uint64_t>(seed);
    config.workers = static_cast<int>(integer("run.workers").value_or(0));
    if (config.batches < 2) throw fail(line_of("run.batches"), "run.batches must be at least 2");
    if (config.samples < 1) throw fail(line_of("run.samples"), "run.samples must be positive");
    if (config.workers < 0) throw fail(line_of("run.workers"), "run.workers must be >= 0");

    for (double z : config.thresholds) {
        try {
            (void)config.model_at(z);
        } catch (const ConfigError& e) {
            const int where = line_of("threshold") ? line_of("threshold") : line_of("model.a");
            throw fail(where, e.what());
        }
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_config(in, path.string());
}

std::string format_row(const EstimateRow& row) {
    const auto& s = row.stats;
    std::optional<double> estimate;
    std::optional<double> log10_estimate;
    if (!s.no_hits()) {
        estimate = s.estimate;
        if (s.estimate > 0.0) log10_estimate = std::log10(s.estimate);
    }
    std::ostringstream out;
    out << sci(row.z) << ',' << row.n << ',' << method_name(row.method) << ',' << sci(estimate)
        << ',' << sci(s.rel_error) << ',' << sci(log10_estimate) << ',' << sci(row.c_star) << ','
        << sci(row.initial_value) << ',' << sci(row.rate_u0) << ',' << s.batches() << ','
        << s.samples_per_batch << ',' << row.seed << ',' << sci(s.wall_time);
    return out.str();
}

ParsedRow parse_row(std::string_view line) {
    const auto cells = split(trim(line), ',');
    if (cells.size() != 13) {
        throw ConfigError("expected 13 CSV fields, got " + std::to_string(cells.size()));
    }
    auto real = [&](std::size_t i) {
        const auto v = parse_number<double>(cells[i]);
        if (!v) throw ConfigError("malformed CSV field " + std::to_string(i));
        return *v;
    };
    auto optional_real = [&](std::size_t i) -> std::optional<double> {
        if (trim(cells[i]).empty()) return std::nullopt;
        return real(i);
    };
    auto whole = [&](std::size_t i) {
        const auto v = parse_number<long long>(cells[i]);
        if (!v) throw ConfigError("malformed CSV field " + std::to_string(i));
        return *v;
    };
    ParsedRow row;
    row.z = real(0);
    row.n = static_cast<int>(whole(1));
    row.method = parse_method(trim(cells[2]));
    row.estimate = optional_real(3);
    row.rel_error = optional_real(4);
    row.log10_estimate = optional_real(5);
    row.c_star = optional_real(6);
    row.initial_value = optional_real(7);
    row.rate_u0 = optional_real(8);
    row.batches = static_cast<int>(whole(9));
    row.samples = static_cast<int>(whole(10));
    row.seed = static_cast<std::uint64_t>(whole(11));
    row.wall_time = real(12);
    return row;
}

EstimateRow estimate_one(const RunConfig& config, double z) {
    const ModelSpec spec = config.model_at(z);
    const auto policy = build_policy(spec, policy_variant(config.method), config.energy_override);
    EstimateRow row;
    row.z = z;
    row.n = spec.population;
    row.method = config.method;
    row.seed = config.seed;
    row.stats = run_batches(spec, policy, config.batches, config.samples, config.seed,
                            config.workers);
    if (policy.variant() != PolicyVariant::none) {
        row.c_star = policy.energy_level();
        row.initial_value = policy.initial_value();
    }
    if (spec.homogeneous()) row.rate_u0 = rate_U0(spec);
    return row;
}

namespace {

void log_summary(const EstimateRow& row, std::ostream& log) {
    log << "z=" << row.z << " method=" << method_name(row.method);
    if (row.stats.no_hits()) {
        log << " no hits";
    } else {
        log << " estimate=" << row.stats.estimate;
        if (row.stats.rel_error) log << " rel_error=" << *row.stats.rel_error;
    }
    if (row.c_star) log << " c*=" << *row.c_star;
    log << " (" << row.stats.wall_time << " s)\n";
}

}  // namespace

std::vector<EstimateRow> cmd_estimate(const RunConfig& config, std::ostream& csv,
                                      std::ostream& log) {
    std::vector<EstimateRow> rows;
    csv << kEstimateHeader << '\n';
    for (double z : config.thresholds) {
        rows.push_back(estimate_one(config, z));
        csv << format_row(rows.back()) << '\n';
        log_summary(rows.back(), log);
    }
    return rows;
}

std::vector<TableDefinition> published_tables() {
    const auto zs = default_thresholds();
    return {
        {"table1", ModelSpec{{1.0}, {0.01}, 0.0, 125, 5.0, 0.1}, SamplerMethod::is1d, zs},
        {"table2", ModelSpec{{1.0}, {0.01}, 5.0, 125, 5.0, 0.1}, SamplerMethod::is_hom, zs},
        {"table3", ModelSpec{{0.8, 0.2}, {0.01, 0.05}, 5.0, 125, 5.0, 0.1},
         SamplerMethod::is_astar, zs},
    };
}

void cmd_tables(std::uint64_t seed, int workers, const std::filesystem::path& out_dir,
                std::ostream& log, int batches, int samples) {
    std::filesystem::create_directories(out_dir);
    for (const auto& table : published_tables()) {
        std::ofstream csv(out_dir / (table.name + ".csv"));
        if (!csv) throw ConfigError("cannot write " + (out_dir / (table.name + ".csv")).string());
        csv << kEstimateHeader << '\n';
        log << table.name << '\n';
        for (double z : table.thresholds) {
            for (auto method : {table.is_method, SamplerMethod::mc}) {
                RunConfig config;
                config.model = table.model;
                config.thresholds = {z};
                config.method = method;
                config.batches = batches;
                config.samples = samples;
                config.seed = seed;
                config.workers = workers;
                const auto row = estimate_one(config, z);
                csv << format_row(row) << '\n';
                log_summary(row, log);
            }
        }
    }
}

namespace {

struct CheckLine {
    std::ostream& out;
    bool all = true;

    void operator()(bool passed, const std::string& name, const std::string& detail) {
        all = all && passed;
        out << (passed ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    }
};

std::string describe(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

}  // namespace

bool cmd_verify(const RunConfig& config, std::ostream& report) {
    CheckLine check{report};
    const int grid = config.model.groups() == 1 ? 1001 : 61;

    for (double z : config.thresholds) {
        const ModelSpec spec = config.model_at(z);
        const std::string tag = "z=" + describe(z) + " ";
        const auto policy =
            build_policy(spec, policy_variant(config.method), config.energy_override);
        const auto sub = verify_subsolution(policy, spec, grid);
        check(sub.passed, tag + "subsolution",
              "min residual " + describe(sub.min_residual) + ", max terminal " +
                  describe(sub.max_terminal) + ", c " + describe(policy.energy_level()));
        if (policy.variant() == PolicyVariant::optimal_1d ||
            policy.variant() == PolicyVariant::homogeneous) {
            check(sub.max_energy_gap <= 1e-10, tag + "energy identity",
                  "max |H(x, alpha) - c| " + describe(sub.max_energy_gap));
        }

        if (spec.groups() == 2) {
            const double c = policy.energy_level() > 0.0 ? policy.energy_level()
                                                         : std::max(solve_energy_level(spec), 0.01);
            const auto naive = conservativity_check(spec, c, 41, TiltField::equal_split);
            const bool equal = spec.homogeneous();
            check(naive.conservative == equal, tag + "equal-split field curl",
                  "max |curl| " + describe(naive.max_abs_curl) +
                      (equal ? " (equal rates: expected conservative)"
                             : " (unequal rates: expected nonzero)"));
            const auto star = conservativity_check(spec, c, 41, TiltField::a_star);
            check(star.conservative, tag + "a-star field curl",
                  "max |curl| " + describe(star.max_abs_curl));
        }

        std::vector<double> x(spec.groups());
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = 0.5 * z * spec.weights[j];
        for (double a : {-1.5, 0.0, 0.7, 2.0}) {
            const std::vector<double> alpha(spec.groups(), a);
            const auto saddle = saddle_identity_check(spec, x, alpha);
            check(saddle.passed, tag + "saddle identity alpha=" + describe(a),
                  "gap " + describe(std::abs(saddle.saddle_value - saddle.target)));
        }
    }

    // Small population: importance sampling against the exact answer.
    ModelSpec small = config.model_at(config.thresholds.front());
    small.population = 8;
    const auto policy =
        build_policy(small, policy_variant(config.method), config.energy_override);
    const double exact = exact_hit_probability(small);
    const auto stats = run_batches(small, policy, 100, 2000, config.seed, config.workers);
    const double se = stats.standard_error();
    const bool close = std::abs(stats.estimate - exact) <= 3.0 * se || stats.estimate == exact;
    check(close, "n=8 oracle consistency",
          "estimate " + describe(stats.estimate) + ", exact " + describe(exact) + ", SE " +
              describe(se));
    return check.all;
}

void cmd_oracle(const RunConfig& config, std::ostream& csv) {
    csv << kOracleHeader << '\n';
    for (double z : config.thresholds) {
        const ModelSpec spec = config.model_at(z);
        const TruncatedChain chain(spec);
        std::optional<double> binomial;
        if (spec.contagion == 0.0 && spec.homogeneous()) binomial = binomial_tail_reference(spec);
        csv << sci(z) << ',' << spec.population << ',' << sci(exact_hit_probability(spec)) << ','
            << sci(binomial) << ',' << chain.transient_states() + 1 << '\n';
    }
}

}  // namespace rareis
