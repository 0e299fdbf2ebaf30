#include "ehet/scenario.hpp"

#include "ehet/errors.hpp"
#include "ehet/psi.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <random>
#include <sstream>

namespace ehet {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
    throw ParseError(0, "config " + where + ": " + what);
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) schema_error(where, "expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
            schema_error(where, "unknown key '" + key + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        schema_error(where + "." + key, e.what());
    }
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    T v{};
    read(j, key, v, where);
    out = v;
}

ConsumptionSpec parse_consumption(const json& j, const std::string& where) {
    allow_keys(j, where, {"kind", "sigma", "alpha", "lambda", "zeta", "p_n"});
    ConsumptionSpec c;
    read(j, "kind", c.kind, where);
    read(j, "sigma", c.sigma, where);
    read(j, "alpha", c.alpha, where);
    read(j, "lambda", c.lambda, where);
    read(j, "zeta", c.zeta, where);
    read(j, "p_n", c.p_n, where);
    return c;
}

ArrivalSpec parse_arrivals(const json& j, const std::string& where) {
    allow_keys(j, where, {"kind", "b", "p", "mean", "b_max", "pmf"});
    ArrivalSpec a;
    read(j, "kind", a.kind, where);
    read(j, "b", a.b, where);
    read(j, "p", a.p, where);
    read(j, "mean", a.mean, where);
    read(j, "b_max", a.b_max, where);
    read(j, "pmf", a.pmf, where);
    return a;
}

DeviceSpec parse_device(const json& j, const std::string& where) {
    allow_keys(j, where, {"battery", "battery_joule", "consumption", "arrivals", "psi", "trace"});
    DeviceSpec d;
    read(j, "battery", d.battery, where);
    read(j, "battery_joule", d.battery_joule, where);
    read(j, "psi", d.psi, where);
    if (j.contains("consumption")) d.consumption = parse_consumption(j.at("consumption"), where + ".consumption");
    if (j.contains("trace") && !j.at("trace").is_null()) {
        const json& t = j.at("trace");
        const std::string tw = where + ".trace";
        allow_keys(t, tw, {"path", "slot_seconds", "panel_area_cm2", "quantum_uw_per_cm2", "stride"});
        TraceSpec ts;
        read(t, "path", ts.path, tw);
        read(t, "slot_seconds", ts.slot_seconds, tw);
        read(t, "panel_area_cm2", ts.panel_area_cm2, tw);
        read(t, "quantum_uw_per_cm2", ts.quantum_uw_per_cm2, tw);
        read(t, "stride", ts.stride, tw);
        d.trace = ts;
        d.arrivals.kind = "trace";
    }
    if (j.contains("arrivals")) d.arrivals = parse_arrivals(j.at("arrivals"), where + ".arrivals");
    return d;
}

json consumption_json(const ConsumptionSpec& c) {
    json j{{"kind", c.kind}, {"sigma", c.sigma}, {"alpha", c.alpha}, {"zeta", c.zeta}, {"p_n", c.p_n}};
    j["lambda"] = c.lambda ? json(*c.lambda) : json(nullptr);
    return j;
}

json arrivals_json(const ArrivalSpec& a) {
    return {{"kind", a.kind}, {"b", a.b}, {"p", a.p}, {"mean", a.mean}, {"b_max", a.b_max}, {"pmf", a.pmf}};
}

json device_json(const DeviceSpec& d) {
    json j{{"battery", d.battery},
           {"consumption", consumption_json(d.consumption)},
           {"arrivals", arrivals_json(d.arrivals)},
           {"psi", d.psi}};
    j["battery_joule"] = d.battery_joule ? json(*d.battery_joule) : json(nullptr);
    if (d.trace)
        j["trace"] = {{"path", d.trace->path},
                      {"slot_seconds", d.trace->slot_seconds},
                      {"panel_area_cm2", d.trace->panel_area_cm2},
                      {"quantum_uw_per_cm2", d.trace->quantum_uw_per_cm2},
                      {"stride", d.trace->stride}};
    else
        j["trace"] = nullptr;
    return j;
}

std::string resolve(const std::string& base, const std::string& path) {
    if (base.empty() || std::filesystem::path(path).is_absolute()) return path;
    return (std::filesystem::path(base) / path).string();
}

ArrivalTrace load_device_trace(const DeviceSpec& d, const std::string& base, const std::string& label) {
    const std::string path = resolve(base, d.trace->path);
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace '" + path + "'");
    return ingest_trace(in, *d.trace, label);
}

ArrivalProcess make_process(const DeviceSpec& d, const std::string& base, const std::string& name) {
    const ArrivalSpec& a = d.arrivals;
    if (a.kind == "deterministic") return make_deterministic(a.b);
    if (a.kind == "bernoulli") return make_bernoulli(a.b, a.p);
    if (a.kind == "truncated_geometric") return make_truncated_geometric(a.mean, a.b_max);
    if (a.kind == "uniform") return make_uniform(a.b_max);
    if (a.kind == "empirical") return ArrivalProcess(a.pmf);
    if (a.kind == "trace") {
        if (!d.trace) schema_error(name + ".arrivals", "kind 'trace' needs a trace section");
        return make_empirical(load_device_trace(d, base, name));
    }
    schema_error(name + ".arrivals", "unknown kind '" + a.kind + "'");
}

PsiFunction make_psi(const std::string& kind, const ConsumptionModel& q, const RewardFunction& g, double rho_max,
                     const std::string& name) {
    if (kind == "hull") return build_psi(q, g, rho_max);
    if (kind == "chord") return linear_psi(q, g, rho_max);
    if (kind == "cost") return cost_psi(q, g, rho_max);
    schema_error(name + ".psi", "expected hull, chord or cost, got '" + kind + "'");
}

std::vector<std::string> split_fields(const std::string& line) {
    char delim = 0;
    for (char c : {',', ';', '\t'})
        if (line.find(c) != std::string::npos) {
            delim = c;
            break;
        }
    std::vector<std::string> out;
    if (delim) {
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, delim)) out.push_back(f);
    } else {
        std::istringstream ss(line);
        std::string f;
        while (ss >> f) out.push_back(f);
    }
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t\r\"");
        const auto e = f.find_last_not_of(" \t\r\"");
        f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
    }
    return out;
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::size_t used = 0;
    try {
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// Days from 1970-01-01 to the given civil date (proleptic Gregorian).
long days_from_civil(long y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

} // namespace

std::optional<double> parse_iso8601(std::string_view text) {
    const std::string s(text);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, n = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &n) != 3 || n != 10) return std::nullopt;
    double sec = 0.0;
    std::size_t pos = 10;
    if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
        int used = 0;
        if (std::sscanf(s.c_str() + pos + 1, "%2d:%2d%n", &h, &mi, &used) != 2 || used != 5) return std::nullopt;
        pos += 1 + used;
        if (pos < s.size() && s[pos] == ':') {
            std::size_t end = pos + 1;
            while (end < s.size() && (std::isdigit(static_cast<unsigned char>(s[end])) || s[end] == '.')) ++end;
            const auto v = parse_number(s.substr(pos + 1, end - pos - 1));
            if (!v) return std::nullopt;
            sec = *v;
            pos = end;
        }
    }
    double offset = 0.0;
    if (pos < s.size()) {
        if (s[pos] == 'Z' && pos + 1 == s.size()) {
            pos = s.size();
        } else if (s[pos] == '+' || s[pos] == '-') {
            int oh = 0, om = 0;
            if (std::sscanf(s.c_str() + pos + 1, "%2d:%2d", &oh, &om) != 2) return std::nullopt;
            offset = (s[pos] == '+' ? 1.0 : -1.0) * (oh * 3600.0 + om * 60.0);
            pos = s.size();
        } else {
            return std::nullopt;
        }
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec >= 61.0) return std::nullopt;
    const double days = static_cast<double>(days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)));
    return days * 86400.0 + h * 3600.0 + mi * 60.0 + sec - offset;
}

ArrivalTrace ingest_trace(std::istream& in, const TraceSpec& spec, std::string label) {
    if (!(spec.slot_seconds > 0.0)) throw DomainError("slot length must be > 0");
    if (!(spec.quantum_uw_per_cm2 > 0.0)) throw DomainError("quantum must be > 0");
    if (!(spec.panel_area_cm2 > 0.0)) throw DomainError("panel area must be > 0");
    if (spec.stride < 1) throw DomainError("stride must be >= 1");

    std::vector<std::pair<double, double>> samples;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto fields = split_fields(line);
        if (fields.empty() || (fields.size() == 1 && fields[0].empty())) continue;
        if (fields.size() < 2) throw ParseError(lineno, "expected two columns");
        auto t = parse_number(fields[0]);
        if (!t) t = parse_iso8601(fields[0]);
        const auto v = parse_number(fields[1]);
        if (!t || !v) {
            if (samples.empty() && !header_seen) {
                header_seen = true;
                continue;
            }
            throw ParseError(lineno, "cannot parse '" + fields[0] + "', '" + fields[1] + "'");
        }
        if (*v < 0.0) throw ParseError(lineno, "negative irradiance");
        if (!samples.empty() && *t <= samples.back().first) throw ParseError(lineno, "timestamps are not increasing");
        samples.emplace_back(*t, *v);
    }
    if (samples.empty()) throw ParseError(lineno, "trace has no samples");

    const double t0 = samples.front().first;
    const auto slot_of = [&](double t) { return static_cast<std::size_t>(std::floor((t - t0) / spec.slot_seconds)); };
    const std::size_t n_slots = slot_of(samples.back().first) + 1;
    std::vector<double> sum(n_slots, 0.0);
    std::vector<long> count(n_slots, 0);
    for (const auto& [t, v] : samples) {
        const std::size_t k = slot_of(t);
        sum[k] += v;
        ++count[k];
    }
    ArrivalTrace out;
    out.slot_seconds = spec.slot_seconds * static_cast<double>(spec.stride);
    out.label = std::move(label);
    double mean = 0.0;
    for (std::size_t k = 0; k < n_slots; ++k) {
        if (count[k] > 0) mean = sum[k] / static_cast<double>(count[k]);
        if (k % static_cast<std::size_t>(spec.stride) == 0) out.quanta.push_back(quantum_floor(mean / spec.quantum_uw_per_cm2));
    }
    return out;
}

ArrivalTrace ingest_trace(const std::string& path, double slot_seconds, double panel_area_cm2,
                          double quantum_uw_per_cm2) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace '" + path + "'");
    TraceSpec spec{path, slot_seconds, panel_area_cm2, quantum_uw_per_cm2, 1};
    return ingest_trace(in, spec, path);
}

ConsumptionModel ConsumptionSpec::build(double reward_lambda) const {
    const double lam = lambda.value_or(reward_lambda);
    switch (consumption_kind_from_string(kind)) {
    case ConsumptionKind::Linear: return ConsumptionModel::linear(sigma);
    case ConsumptionKind::Log: return ConsumptionModel::log(alpha, lam);
    case ConsumptionKind::PiecewiseLinearCircuitry: return ConsumptionModel::piecewise_linear(zeta, p_n, sigma);
    case ConsumptionKind::PiecewiseLogCircuitry: return ConsumptionModel::piecewise_log(zeta, p_n, alpha, lam);
    }
    throw DomainError("unknown consumption kind");
}

void Scenario::validate() const {
    if (schema_version != kSchemaVersion)
        throw ParseError(0, "unsupported schema_version " + std::to_string(schema_version));
    if (!(lambda > 0.0)) throw DomainError("reward lambda must be > 0");
    if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("beta must lie in [0, 1]");
    if (horizon < 1) throw DomainError("horizon must be >= 1");
    if (tx.battery < 1 || rc.battery < 1) throw DomainError("battery capacities must be >= 1 quantum");
    if (!(initial_tx >= 0.0 && initial_tx <= static_cast<double>(tx.battery)) ||
        !(initial_rc >= 0.0 && initial_rc <= static_cast<double>(rc.battery)))
        throw DomainError("initial battery levels must lie within the capacities");
    if (tx.battery_joule && rc.battery_joule) {
        const double a = *tx.battery_joule / static_cast<double>(tx.battery);
        const double b = *rc.battery_joule / static_cast<double>(rc.battery);
        if (std::abs(a - b) > 1e-9 * std::max(a, b))
            throw DomainError("Joule calibration differs between devices: " + std::to_string(a) + " vs " +
                              std::to_string(b) + " J per quantum");
    }
    system().validate();
}

SystemConfig Scenario::system() const {
    SystemConfig cfg;
    cfg.e_max_tx = tx.battery;
    cfg.e_max_rc = rc.battery;
    cfg.g = RewardFunction(lambda);
    cfg.q_tx = tx.consumption.build(lambda);
    cfg.q_rc = rc.consumption.build(lambda);
    cfg.arr_tx = make_process(tx, base_dir, "tx");
    cfg.arr_rc = make_process(rc, base_dir, "rc");
    cfg.beta = beta;
    cfg.quantization = quantization;
    cfg.transfer_enabled = transfer;
    cfg.rho_max = rho_max.value_or(max_supported_power(cfg.q_tx, cfg.q_rc, tx.battery, rc.battery, quantization));
    return cfg;
}

BoundInput Scenario::bound_input() const {
    const SystemConfig cfg = system();
    return BoundInput{make_psi(tx.psi, cfg.q_tx, cfg.g, cfg.rho_max, "tx"),
                      make_psi(rc.psi, cfg.q_rc, cfg.g, cfg.rho_max, "rc"),
                      cfg.arr_tx.mean(),
                      cfg.arr_rc.mean(),
                      beta,
                      cfg.g};
}

std::pair<ArrivalTrace, ArrivalTrace> Scenario::traces() const {
    const SystemConfig cfg = system();
    std::mt19937_64 gen(seed);
    const auto make = [&](const DeviceSpec& d, const ArrivalProcess& proc, const char* name) {
        if (!d.trace) {
            ArrivalTrace t = sample(proc, static_cast<std::size_t>(horizon), gen);
            t.label = name;
            return t;
        }
        ArrivalTrace t = load_device_trace(d, base_dir, name);
        if (t.quanta.size() < static_cast<std::size_t>(horizon))
            throw DomainError(std::string(name) + " trace has " + std::to_string(t.quanta.size()) +
                              " slots, fewer than the horizon " + std::to_string(horizon));
        t.quanta.resize(static_cast<std::size_t>(horizon));
        return t;
    };
    ArrivalTrace a = make(tx, cfg.arr_tx, "tx");
    ArrivalTrace b = make(rc, cfg.arr_rc, "rc");
    return {std::move(a), std::move(b)};
}

OfflineInstance Scenario::offline_instance(const ArrivalTrace& tx_trace, const ArrivalTrace& rc_trace) const {
    const SystemConfig cfg = system();
    if (tx_trace.quanta.size() != rc_trace.quanta.size() || tx_trace.quanta.empty())
        throw DomainError("offline traces must be non-empty and of equal length");
    OfflineInstance inst;
    inst.horizon = static_cast<int>(tx_trace.quanta.size());
    for (std::size_t k = 0; k + 1 < tx_trace.quanta.size(); ++k) {
        inst.b_tx.push_back(static_cast<double>(tx_trace.quanta[k]));
        inst.b_rc.push_back(static_cast<double>(rc_trace.quanta[k]));
    }
    inst.q_tx = cfg.q_tx;
    inst.q_rc = cfg.q_rc;
    inst.beta = beta;
    inst.g = cfg.g;
    if (finite_batteries) {
        inst.e_max_tx = static_cast<double>(tx.battery);
        inst.e_max_rc = static_cast<double>(rc.battery);
    }
    inst.e_init_tx = initial_tx;
    inst.e_init_rc = initial_rc;
    inst.rho_max = cfg.rho_max;
    inst.transfer_enabled = transfer;
    return inst;
}

std::optional<double> Scenario::quantum_joule() const {
    if (tx.battery_joule) return *tx.battery_joule / static_cast<double>(tx.battery);
    if (rc.battery_joule) return *rc.battery_joule / static_cast<double>(rc.battery);
    return std::nullopt;
}

std::string Scenario::to_json(int indent) const {
    json j{{"schema_version", schema_version},
           {"reward", {{"lambda", lambda}}},
           {"beta", beta},
           {"transfer", transfer},
           {"quantization", quantization == Quantization::Lower ? "lower" : "upper"},
           {"horizon", horizon},
           {"seed", seed},
           {"tx", device_json(tx)},
           {"rc", device_json(rc)},
           {"offline", {{"finite_batteries", finite_batteries}, {"initial_tx", initial_tx}, {"initial_rc", initial_rc}}}};
    j["rho_max"] = rho_max ? json(*rho_max) : json(nullptr);
    return j.dump(indent);
}

Scenario parse_scenario(std::string_view text, std::string base_dir) {
    json j;
    try {
        j = json::parse(text.begin(), text.end(), nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ParseError(0, std::string("config is not valid JSON: ") + e.what());
    }
    allow_keys(j, "root",
               {"schema_version", "reward", "beta", "transfer", "quantization", "rho_max", "horizon", "seed", "tx",
                "rc", "offline", "description"});
    Scenario s;
    s.base_dir = std::move(base_dir);
    if (!j.contains("schema_version")) schema_error("root", "missing schema_version");
    read(j, "schema_version", s.schema_version, "root");
    if (s.schema_version != kSchemaVersion)
        schema_error("schema_version", "unsupported version " + std::to_string(s.schema_version));
    if (j.contains("reward")) {
        allow_keys(j.at("reward"), "reward", {"lambda"});
        read(j.at("reward"), "lambda", s.lambda, "reward");
    }
    read(j, "beta", s.beta, "root");
    read(j, "transfer", s.transfer, "root");
    std::string quant = "lower";
    read(j, "quantization", quant, "root");
    if (quant == "lower")
        s.quantization = Quantization::Lower;
    else if (quant == "upper")
        s.quantization = Quantization::Upper;
    else
        schema_error("quantization", "expected lower or upper");
    read(j, "rho_max", s.rho_max, "root");
    read(j, "horizon", s.horizon, "root");
    read(j, "seed", s.seed, "root");
    if (!j.contains("tx") || !j.contains("rc")) schema_error("root", "both tx and rc sections are required");
    s.tx = parse_device(j.at("tx"), "tx");
    s.rc = parse_device(j.at("rc"), "rc");
    if (j.contains("offline")) {
        const json& o = j.at("offline");
        allow_keys(o, "offline", {"finite_batteries", "initial_tx", "initial_rc"});
        read(o, "finite_batteries", s.finite_batteries, "offline");
        read(o, "initial_tx", s.initial_tx, "offline");
        read(o, "initial_rc", s.initial_rc, "offline");
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), std::filesystem::path(path).parent_path().string());
}

} // namespace ehet
