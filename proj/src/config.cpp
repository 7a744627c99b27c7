#include "haptest/config.hpp"

#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#include "haptest/errors.hpp"
#include "haptest/trial_io.hpp"

namespace haptest {

namespace {

using Value = std::variant<double, bool, std::string, std::vector<double>,
                           std::vector<std::string>>;

struct ParsedConfig {
    std::map<std::string, std::map<std::string, Value>> sections;
    std::string origin;
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

Value parse_scalar(const std::string& raw, const std::string& where) {
    if (raw == "true") return true;
    if (raw == "false") return false;
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
        return raw.substr(1, raw.size() - 2);
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0')
        throw ConfigError(where + ": cannot parse value '" + raw + "'");
    return v;
}

Value parse_value(const std::string& raw, const std::string& where) {
    if (raw.empty()) throw ConfigError(where + ": empty value");
    if (raw.front() == '[') {
        if (raw.back() != ']')
            throw ConfigError(where + ": unterminated array");
        std::vector<double> numbers;
        std::vector<std::string> strings;
        std::string body = raw.substr(1, raw.size() - 2);
        std::stringstream ss(body);
        std::string item;
        bool any_string = false, any_number = false;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            Value v = parse_scalar(item, where);
            if (std::holds_alternative<std::string>(v)) {
                strings.push_back(std::get<std::string>(v));
                any_string = true;
            } else if (std::holds_alternative<double>(v)) {
                numbers.push_back(std::get<double>(v));
                any_number = true;
            } else {
                throw ConfigError(where + ": booleans not allowed in arrays");
            }
        }
        if (any_string && any_number)
            throw ConfigError(where + ": mixed array types");
        if (any_string) return strings;
        return numbers;
    }
    return parse_scalar(raw, where);
}

ParsedConfig parse_text(const std::string& text, const std::string& origin) {
    ParsedConfig out;
    out.origin = origin;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": empty section name");
            out.sections[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string raw = trim(line.substr(eq + 1));
        const std::string where = origin + ": " + section + "." + key;
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (section.empty())
            throw ConfigError(where + ": key outside any section");
        out.sections[section][key] = parse_value(raw, where);
    }
    return out;
}

/// Typed reader that tracks which keys were consumed so leftovers can be
/// reported as unknown.
class SectionReader {
public:
    SectionReader(ParsedConfig& cfg, const std::string& name)
        : cfg_(cfg), name_(name) {}

    template <typename T>
    void get(const std::string& key, T& out) {
        auto sec = cfg_.sections.find(name_);
        if (sec == cfg_.sections.end()) return;
        auto it = sec->second.find(key);
        if (it == sec->second.end()) return;
        assign(it->second, out, path(key));
        consumed_.push_back(key);
    }

    void finish() {
        auto sec = cfg_.sections.find(name_);
        if (sec == cfg_.sections.end()) return;
        for (const auto& [key, value] : sec->second)
            if (std::find(consumed_.begin(), consumed_.end(), key) ==
                consumed_.end())
                throw ConfigError(cfg_.origin + ": unknown key " + path(key));
        cfg_.sections.erase(sec);
    }

private:
    std::string path(const std::string& key) const { return name_ + "." + key; }

    static void assign(const Value& v, double& out, const std::string& where) {
        if (!std::holds_alternative<double>(v))
            throw ConfigError(where + ": expected a number");
        out = std::get<double>(v);
    }
    static void assign(const Value& v, int& out, const std::string& where) {
        double d;
        assign(v, d, where);
        out = static_cast<int>(std::llround(d));
    }
    static void assign(const Value& v, std::uint64_t& out, const std::string& where) {
        double d;
        assign(v, d, where);
        if (d < 0) throw ConfigError(where + ": expected a non-negative integer");
        out = static_cast<std::uint64_t>(d);
    }
    static void assign(const Value& v, bool& out, const std::string& where) {
        if (!std::holds_alternative<bool>(v))
            throw ConfigError(where + ": expected true/false");
        out = std::get<bool>(v);
    }
    static void assign(const Value& v, std::string& out, const std::string& where) {
        if (!std::holds_alternative<std::string>(v))
            throw ConfigError(where + ": expected a quoted string");
        out = std::get<std::string>(v);
    }
    static void assign(const Value& v, std::vector<std::string>& out,
                       const std::string& where) {
        if (std::holds_alternative<std::vector<std::string>>(v)) {
            out = std::get<std::vector<std::string>>(v);
            return;
        }
        if (std::holds_alternative<std::vector<double>>(v) &&
            std::get<std::vector<double>>(v).empty()) {
            out.clear();
            return;
        }
        throw ConfigError(where + ": expected an array of strings");
    }
    template <int N>
    static void assign(const Value& v, Eigen::Matrix<double, N, 1>& out,
                       const std::string& where) {
        if (!std::holds_alternative<std::vector<double>>(v))
            throw ConfigError(where + ": expected an array of numbers");
        const auto& arr = std::get<std::vector<double>>(v);
        if (static_cast<int>(arr.size()) != N)
            throw ConfigError(where + ": expected exactly " + std::to_string(N) +
                              " numbers");
        for (int i = 0; i < N; ++i) out(i) = arr[static_cast<std::size_t>(i)];
    }

    ParsedConfig& cfg_;
    std::string name_;
    std::vector<std::string> consumed_;
};

void append(std::string& out, const char* key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s = %.17g\n", key, v);
    out += buf;
}

void append(std::string& out, const char* key, std::uint64_t v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s = %" PRIu64 "\n", key, v);
    out += buf;
}

void append(std::string& out, const char* key, int v) {
    out += key;
    out += " = " + std::to_string(v) + "\n";
}

void append(std::string& out, const char* key, bool v) {
    out += key;
    out += v ? " = true\n" : " = false\n";
}

template <int N>
void append(std::string& out, const char* key,
            const Eigen::Matrix<double, N, 1>& v) {
    out += key;
    out += " = [";
    char buf[40];
    for (int i = 0; i < N; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v(i));
        out += buf;
        if (i + 1 < N) out += ", ";
    }
    out += "]\n";
}

}  // namespace

TrialConfig ExperimentConfig::trial_config() const {
    TrialConfig cfg;
    cfg.controller.kp = kp;
    cfg.controller.kd = kd;
    cfg.controller.sat_limit = sat_limit;
    cfg.estimator = estimator;
    return cfg;
}

std::vector<ActionSpec> ExperimentConfig::actions() const {
    return {tapping, indentation, sliding};
}

Catalog ExperimentConfig::catalog() const {
    if (catalog_file.empty()) return default_catalog();
    return read_catalog_json(catalog_file);
}

void ExperimentConfig::validate() const {
    robot.validate();
    estimator.validate();
    trial_config().controller.validate();
    tapping.validate();
    indentation.validate();
    sliding.validate();
    if (campaign.trials_per_pair <= 0)
        throw ConfigError("campaign.trials_per_pair must be > 0");
    if (campaign.jobs < 0) throw ConfigError("campaign.jobs must be >= 0");
    if (learning.folds < 2) throw ConfigError("learning.folds must be >= 2");
    if (learning.repetitions < 1 || learning.clustering_repetitions < 1)
        throw ConfigError("learning repetitions must be >= 1");
    if (learning.clusters < 1) throw ConfigError("learning.clusters must be >= 1");
    if (schemas.empty()) throw ConfigError("learning.schemas must not be empty");
    if (!catalog_file.empty() && !std::filesystem::exists(catalog_file))
        throw ConfigError("campaign.catalog_file does not exist: " + catalog_file);
}

std::string ExperimentConfig::dump() const {
    std::string out;
    out += "[robot]\n";
    append(out, "m_perp", robot.m_perp);
    append(out, "m_par", robot.m_par);
    append(out, "dt", robot.dt);
    append(out, "process_force_var_perp", robot.q_process(1, 1));
    append(out, "process_force_var_par", robot.q_process(3, 3));
    append(out, "r_meas_pos", robot.r_meas_pos);
    append(out, "r_meas_force", robot.r_meas_force);

    out += "\n[estimator]\n";
    append(out, "p_xi0", estimator.p_xi0);
    append(out, "p_theta0", estimator.p_theta0);
    append<5>(out, "q_xi", estimator.q_xi_diag);
    append<3>(out, "q_theta", estimator.q_theta_diag);
    append(out, "r_xi", estimator.r_xi);
    append(out, "r_theta", estimator.r_theta);
    append<3>(out, "theta0", estimator.theta0);
    append(out, "mu0", estimator.mu0);

    out += "\n[control]\n";
    append(out, "kp", kp);
    append(out, "kd", kd);
    append(out, "sat_limit", sat_limit);

    out += "\n[tapping]\n";
    append(out, "duration", tapping.duration);
    append(out, "approach_speed", tapping.approach_speed);
    append(out, "start_height", tapping.start_height);
    append(out, "tap_mass", tapping.tap_mass);
    append(out, "impact_threshold", tapping.impact_threshold);

    out += "\n[indentation]\n";
    append(out, "duration", indentation.duration);
    append(out, "amplitude", indentation.amplitude);
    append(out, "frequency", indentation.frequency);
    append(out, "offset", indentation.offset);

    out += "\n[sliding]\n";
    append(out, "duration", sliding.duration);
    append(out, "speed", sliding.slide_speed);
    append(out, "hold_force", sliding.hold_force);

    out += "\n[campaign]\n";
    append(out, "trials_per_pair", campaign.trials_per_pair);
    append(out, "seed", campaign.seed);
    append(out, "jobs", campaign.jobs);
    out += "catalog_file = \"" + catalog_file + "\"\n";

    out += "\n[learning]\n";
    append(out, "folds", learning.folds);
    append(out, "repetitions", learning.repetitions);
    append(out, "clusters", learning.clusters);
    append(out, "clustering_repetitions", learning.clustering_repetitions);
    append(out, "seed", learning.seed);
    out += "schemas = [";
    for (std::size_t i = 0; i < schemas.size(); ++i) {
        out += "\"";
        out += schema_name(schemas[i]);
        out += "\"";
        if (i + 1 < schemas.size()) out += ", ";
    }
    out += "]\n";
    append(out, "sf_full36", sf_full36);
    return out;
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    ParsedConfig parsed = parse_text(text, origin);
    ExperimentConfig cfg;

    {
        SectionReader robot(parsed, "robot");
        robot.get("m_perp", cfg.robot.m_perp);
        robot.get("m_par", cfg.robot.m_par);
        robot.get("dt", cfg.robot.dt);
        double qp = cfg.robot.q_process(1, 1), qt = cfg.robot.q_process(3, 3);
        robot.get("process_force_var_perp", qp);
        robot.get("process_force_var_par", qt);
        cfg.robot.q_process(1, 1) = qp;
        cfg.robot.q_process(3, 3) = qt;
        robot.get("r_meas_pos", cfg.robot.r_meas_pos);
        robot.get("r_meas_force", cfg.robot.r_meas_force);
        robot.finish();
    }
    {
        SectionReader est(parsed, "estimator");
        est.get("p_xi0", cfg.estimator.p_xi0);
        est.get("p_theta0", cfg.estimator.p_theta0);
        est.get("q_xi", cfg.estimator.q_xi_diag);
        est.get("q_theta", cfg.estimator.q_theta_diag);
        est.get("r_xi", cfg.estimator.r_xi);
        est.get("r_theta", cfg.estimator.r_theta);
        est.get("theta0", cfg.estimator.theta0);
        est.get("mu0", cfg.estimator.mu0);
        est.finish();
    }
    {
        SectionReader ctl(parsed, "control");
        ctl.get("kp", cfg.kp);
        ctl.get("kd", cfg.kd);
        ctl.get("sat_limit", cfg.sat_limit);
        ctl.finish();
    }
    {
        SectionReader tap(parsed, "tapping");
        tap.get("duration", cfg.tapping.duration);
        tap.get("approach_speed", cfg.tapping.approach_speed);
        tap.get("start_height", cfg.tapping.start_height);
        tap.get("tap_mass", cfg.tapping.tap_mass);
        tap.get("impact_threshold", cfg.tapping.impact_threshold);
        tap.finish();
    }
    {
        SectionReader ind(parsed, "indentation");
        ind.get("duration", cfg.indentation.duration);
        ind.get("amplitude", cfg.indentation.amplitude);
        ind.get("frequency", cfg.indentation.frequency);
        ind.get("offset", cfg.indentation.offset);
        ind.finish();
    }
    {
        SectionReader sli(parsed, "sliding");
        sli.get("duration", cfg.sliding.duration);
        sli.get("speed", cfg.sliding.slide_speed);
        sli.get("hold_force", cfg.sliding.hold_force);
        sli.finish();
    }
    {
        SectionReader cam(parsed, "campaign");
        cam.get("trials_per_pair", cfg.campaign.trials_per_pair);
        cam.get("seed", cfg.campaign.seed);
        cam.get("jobs", cfg.campaign.jobs);
        cam.get("catalog_file", cfg.catalog_file);
        cam.finish();
    }
    {
        SectionReader lrn(parsed, "learning");
        lrn.get("folds", cfg.learning.folds);
        lrn.get("repetitions", cfg.learning.repetitions);
        lrn.get("clusters", cfg.learning.clusters);
        lrn.get("clustering_repetitions", cfg.learning.clustering_repetitions);
        lrn.get("seed", cfg.learning.seed);
        std::vector<std::string> schema_names;
        lrn.get("schemas", schema_names);
        if (!schema_names.empty()) {
            cfg.schemas.clear();
            for (const auto& name : schema_names)
                cfg.schemas.push_back(schema_from_name(name));
        }
        lrn.get("sf_full36", cfg.sf_full36);
        lrn.finish();
    }
    for (const auto& [name, keys] : parsed.sections)
        if (!keys.empty() || (name != "robot" && name != "estimator" &&
                              name != "control" && name != "tapping" &&
                              name != "indentation" && name != "sliding" &&
                              name != "campaign" && name != "learning"))
            throw ConfigError(origin + ": unknown section [" + name + "]");

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.filename().string());
}

}  // namespace haptest
