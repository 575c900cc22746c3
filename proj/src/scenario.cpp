#include "uavmec/scenario.hpp"

#include "uavmec/energy_model.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace uavmec {

using nlohmann::json;

namespace units {

double dbm_per_hz_to_w_per_hz(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace units

namespace {

// ---------------------------------------------------------------------------
// Config text: [section] headers with `key = <json value>` entries.
// '#' starts a comment outside of strings.
// ---------------------------------------------------------------------------

std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

using Section = std::map<std::string, json>;
using Config = std::map<std::string, Section>;

Config parse_config(const std::string& text) {
    Config cfg;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("config line " + std::to_string(lineno) +
                                 ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            cfg.try_emplace(section);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(lineno) + ": expected `key = value`");
        if (section.empty())
            throw ParseError("config line " + std::to_string(lineno) +
                             ": entry outside of any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        json v = json::parse(value, nullptr, false);
        if (v.is_discarded())
            throw ParseError("config line " + std::to_string(lineno) + ": value for `" + key +
                             "` is not valid (expected a JSON scalar or array)");
        cfg[section][key] = std::move(v);
    }
    return cfg;
}

const json* find(const Config& cfg, const std::string& sec, const std::string& key) {
    auto s = cfg.find(sec);
    if (s == cfg.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

double num(const json& j, const std::string& what) {
    if (!j.is_number()) throw ParseError(what + " must be a number");
    return j.get<double>();
}

Vec2 vec2(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError(what + " must be a [x, y] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Vec2> vec2_list(const json& j, const std::string& what) {
    if (!j.is_array()) throw ParseError(what + " must be an array of [x, y] pairs");
    std::vector<Vec2> out;
    out.reserve(j.size());
    for (const auto& e : j) out.push_back(vec2(e, what));
    return out;
}

Grid2<double> grid(const json& j, int I, int T, const std::string& what) {
    if (!j.is_array() || static_cast<int>(j.size()) != I)
        throw ParseError(what + " must be an array with one row per GU");
    Grid2<double> g(I, T);
    for (int i = 0; i < I; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || static_cast<int>(row.size()) != T)
            throw ParseError(what + " row " + std::to_string(i) + " must have T entries");
        for (int t = 0; t < T; ++t) g(i, t) = num(row[t], what);
    }
    return g;
}

struct ParamField {
    const char* key;
    double NetworkParams::* slot;
};

constexpr ParamField kParamFields[] = {
    {"tau", &NetworkParams::tau},         {"alpha", &NetworkParams::alpha},
    {"kappa", &NetworkParams::kappa},     {"v0", &NetworkParams::v0},
    {"h_s", &NetworkParams::h_s},         {"h_e", &NetworkParams::h_e},
    {"p0", &NetworkParams::p0},           {"p_jam", &NetworkParams::p_jam},
    {"n0", &NetworkParams::n0},           {"b0", &NetworkParams::b0},
    {"g0", &NetworkParams::g0},           {"f_g", &NetworkParams::f_g},
    {"f_u", &NetworkParams::f_u},         {"eps_g", &NetworkParams::eps_g},
    {"eps_u", &NetworkParams::eps_u},     {"p1", &NetworkParams::p1},
    {"p2", &NetworkParams::p2},           {"v_bla", &NetworkParams::v_bla},
    {"v_rot", &NetworkParams::v_rot},     {"drag_g", &NetworkParams::drag_g},
    {"rho_air", &NetworkParams::rho_air}, {"s0", &NetworkParams::s0},
    {"a0", &NetworkParams::a0},           {"x_min", &NetworkParams::x_min},
    {"x_max", &NetworkParams::x_max},     {"y_min", &NetworkParams::y_min},
    {"y_max", &NetworkParams::y_max},     {"zeta", &NetworkParams::zeta},
    {"sca_tol", &NetworkParams::sca_tol}, {"solver_tol", &NetworkParams::solver_tol},
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Scenario load_scenario(const std::string& config_text) {
    const Config cfg = parse_config(config_text);
    Scenario s;

    if (const json* j = find(cfg, "gus", "positions"))
        s.gus = vec2_list(*j, "[gus] positions");
    else
        throw ParseError("missing [gus] positions");
    s.I = static_cast<int>(s.gus.size());

    if (const json* j = find(cfg, "uavs", "start"))
        s.uav_start = vec2_list(*j, "[uavs] start");
    else
        throw ParseError("missing [uavs] start");
    if (const json* j = find(cfg, "uavs", "end"))
        s.uav_end = vec2_list(*j, "[uavs] end");
    else
        throw ParseError("missing [uavs] end");
    s.M = static_cast<int>(s.uav_start.size());

    NetworkParams& p = s.params;
    for (const auto& f : kParamFields)
        if (const json* j = find(cfg, "params", f.key)) p.*(f.slot) = num(*j, f.key);
    // dB-flavoured alternatives, converted on ingest
    if (const json* j = find(cfg, "params", "n0_dbm_hz"))
        p.n0 = units::dbm_per_hz_to_w_per_hz(num(*j, "n0_dbm_hz"));
    if (const json* j = find(cfg, "params", "g0_db")) p.g0 = units::db_to_linear(num(*j, "g0_db"));
    if (const json* j = find(cfg, "params", "m_max")) {
        const double v = num(*j, "m_max");
        p.m_max = static_cast<int>(v);
        if (p.m_max != v) throw ParseError("m_max must be an integer");
    }

    if (const json* j = find(cfg, "jammer", "position")) s.jammer = vec2(*j, "[jammer] position");
    else s.jammer = Vec2(0.5 * (p.x_min + p.x_max), 0.5 * (p.y_min + p.y_max));

    // slot count: explicit, or implied by the eavesdropper path
    int T = 20;
    if (const json* j = find(cfg, "tasks", "T")) T = static_cast<int>(num(*j, "tasks T"));
    if (const json* j = find(cfg, "eavesdropper", "path")) {
        s.eav_path = vec2_list(*j, "[eavesdropper] path");
        if (!find(cfg, "tasks", "T")) T = static_cast<int>(s.eav_path.size());
    }
    s.T = T;

    if (s.eav_path.empty()) {
        Vec2 pos;
        if (const json* j = find(cfg, "eavesdropper", "position")) {
            pos = vec2(*j, "[eavesdropper] position");
        } else {
            // default: stationary at the area centre mirrored about the jammer
            const Vec2 centre(0.5 * (p.x_min + p.x_max), 0.5 * (p.y_min + p.y_max));
            pos = 2.0 * centre - s.jammer;
        }
        s.eav_path.assign(T, pos);
    }

    if (const json* j = find(cfg, "seed", "seed")) s.seed = static_cast<uint64_t>(num(*j, "seed"));

    // tasks: explicit grids, or a seeded draw from uniform ranges
    const json* jl = find(cfg, "tasks", "L");
    const json* jc = find(cfg, "tasks", "c_bar");
    if ((jl == nullptr) != (jc == nullptr))
        throw ParseError("[tasks] L and c_bar must be given together");
    if (jl) {
        s.tasks.L = grid(*jl, s.I, T, "[tasks] L");
        s.tasks.c_bar = grid(*jc, s.I, T, "[tasks] c_bar");
    } else {
        double l_lo = 1e6, l_hi = 1e7, c_lo = 10.0, c_hi = 100.0;
        if (const json* j = find(cfg, "tasks", "L_range")) {
            const Vec2 r = vec2(*j, "[tasks] L_range");
            l_lo = r[0];
            l_hi = r[1];
        }
        if (const json* j = find(cfg, "tasks", "c_range")) {
            const Vec2 r = vec2(*j, "[tasks] c_range");
            c_lo = r[0];
            c_hi = r[1];
        }
        DetRng rng(s.seed);
        s.tasks.L = Grid2<double>(s.I, T);
        s.tasks.c_bar = Grid2<double>(s.I, T);
        for (int i = 0; i < s.I; ++i)
            for (int t = 0; t < T; ++t) {
                s.tasks.L(i, t) = rng.uniform(l_lo, l_hi);
                s.tasks.c_bar(i, t) = rng.uniform(c_lo, c_hi);
            }
    }
    double mu_scalar = 0.0, sigma_factor = 0.01;
    if (const json* j = find(cfg, "tasks", "mu")) mu_scalar = num(*j, "[tasks] mu");
    if (const json* j = find(cfg, "tasks", "sigma_factor"))
        sigma_factor = num(*j, "[tasks] sigma_factor");
    if (const json* j = find(cfg, "tasks", "mu_grid"))
        s.tasks.mu = grid(*j, s.I, T, "[tasks] mu_grid");
    else
        s.tasks.mu = Grid2<double>(s.I, T, mu_scalar);
    if (const json* j = find(cfg, "tasks", "sigma_grid")) {
        s.tasks.sigma = grid(*j, s.I, T, "[tasks] sigma_grid");
    } else {
        s.tasks.sigma = Grid2<double>(s.I, T);
        for (int i = 0; i < s.I; ++i)
            for (int t = 0; t < T; ++t) s.tasks.sigma(i, t) = sigma_factor * s.tasks.c_bar(i, t);
    }

    validate_scenario(s);
    return s;
}

std::string serialize_scenario(const Scenario& s) {
    std::ostringstream out;
    out << "[params]\n";
    const NetworkParams& p = s.params;
    for (const auto& f : kParamFields) out << f.key << " = " << fmt(p.*(f.slot)) << "\n";
    out << "m_max = " << p.m_max << "\n";

    out << "\n[gus]\npositions = [";
    for (size_t i = 0; i < s.gus.size(); ++i)
        out << (i ? ", " : "") << "[" << fmt(s.gus[i][0]) << ", " << fmt(s.gus[i][1]) << "]";
    out << "]\n";

    auto put_list = [&out](const char* key, const std::vector<Vec2>& v) {
        out << key << " = [";
        for (size_t i = 0; i < v.size(); ++i)
            out << (i ? ", " : "") << "[" << fmt(v[i][0]) << ", " << fmt(v[i][1]) << "]";
        out << "]\n";
    };
    out << "\n[uavs]\n";
    put_list("start", s.uav_start);
    put_list("end", s.uav_end);
    out << "\n[jammer]\nposition = [" << fmt(s.jammer[0]) << ", " << fmt(s.jammer[1]) << "]\n";
    out << "\n[eavesdropper]\n";
    put_list("path", s.eav_path);

    auto put_grid = [&out, &s](const char* key, const Grid2<double>& g) {
        out << key << " = [";
        for (int i = 0; i < s.I; ++i) {
            out << (i ? ", " : "") << "[";
            for (int t = 0; t < s.T; ++t) out << (t ? ", " : "") << fmt(g(i, t));
            out << "]";
        }
        out << "]\n";
    };
    out << "\n[tasks]\nT = " << s.T << "\n";
    put_grid("L", s.tasks.L);
    put_grid("c_bar", s.tasks.c_bar);
    put_grid("mu_grid", s.tasks.mu);
    put_grid("sigma_grid", s.tasks.sigma);
    out << "\n[seed]\nseed = " << s.seed << "\n";
    return out.str();
}

void validate_scenario(const Scenario& s) {
    const NetworkParams& p = s.params;
    auto fail = [](const std::string& msg) { throw ValidationError("scenario: " + msg); };

    if (!(p.alpha > 0.0 && p.alpha < 1.0)) fail("alpha must lie in (0,1)");
    if (!(p.tau > 0.0)) fail("tau must be positive");
    if (!(p.v0 > 0.0)) fail("v0 must be positive");
    if (p.m_max < 1) fail("M_max must be at least 1");
    if (p.kappa < 0.0) fail("kappa must be nonnegative");
    struct {
        const char* name;
        double v;
    } positives[] = {{"p0", p.p0},     {"p_jam", p.p_jam}, {"n0", p.n0},       {"b0", p.b0},
                     {"g0", p.g0},     {"f_g", p.f_g},     {"f_u", p.f_u},     {"eps_g", p.eps_g},
                     {"eps_u", p.eps_u}, {"p1", p.p1},     {"p2", p.p2},       {"v_bla", p.v_bla},
                     {"v_rot", p.v_rot}, {"rho_air", p.rho_air}, {"s0", p.s0}, {"a0", p.a0},
                     {"h_s", p.h_s},   {"h_e", p.h_e},     {"tau", p.tau}};
    for (const auto& f : positives)
        if (!(f.v > 0.0)) fail(std::string(f.name) + " must be strictly positive");
    if (!(p.x_min < p.x_max)) fail("X_min must be below X_max");
    if (!(p.y_min < p.y_max)) fail("Y_min must be below Y_max");
    if (!(p.zeta > 0.0)) fail("zeta must be positive");
    if (!(p.sca_tol > 0.0)) fail("sca_tol must be positive");
    if (!(p.solver_tol > 0.0)) fail("solver_tol must be positive");

    if (s.I < 1) fail("at least one GU required");
    if (s.M < 1) fail("at least one S-UAV required");
    if (s.T < 1) fail("at least one time slot required");
    if (static_cast<int>(s.gus.size()) != s.I) fail("GU count mismatch");
    if (static_cast<int>(s.uav_start.size()) != s.M ||
        static_cast<int>(s.uav_end.size()) != s.M)
        fail("UAV endpoint lists must both have M entries");
    if (static_cast<int>(s.eav_path.size()) != s.T)
        fail("eavesdropper path must have exactly T entries");

    auto inside = [&p](const Vec2& w) {
        return w[0] >= p.x_min && w[0] <= p.x_max && w[1] >= p.y_min && w[1] <= p.y_max;
    };
    for (int i = 0; i < s.I; ++i)
        if (!inside(s.gus[i])) fail("GU " + std::to_string(i) + " lies outside the area bounds");
    if (!inside(s.jammer)) fail("jammer lies outside the area bounds");
    for (int m = 0; m < s.M; ++m) {
        if (!inside(s.uav_start[m]) || !inside(s.uav_end[m]))
            fail("UAV " + std::to_string(m) + " endpoints lie outside the area bounds");
        const double reach = (s.T - 1) * p.v0 * p.tau;
        if ((s.uav_end[m] - s.uav_start[m]).norm() > reach + 1e-9)
            fail("UAV " + std::to_string(m) + " endpoints are unreachable: distance " +
                 fmt((s.uav_end[m] - s.uav_start[m]).norm()) + " m exceeds (T-1)*v0*tau = " +
                 fmt(reach) + " m");
    }

    if (s.tasks.L.rows() != s.I || s.tasks.L.cols() != s.T) fail("task grids must be I x T");
    for (int i = 0; i < s.I; ++i)
        for (int t = 0; t < s.T; ++t) {
            const TaskSample ts = s.task(i, t);
            if (!(ts.L > 0.0)) fail("task data length must be positive");
            if (!(ts.c_bar > 0.0)) fail("estimated complexity must be positive");
            if (ts.sigma < 0.0) fail("sigma must be nonnegative");
            if (!(ts.c_bar + ts.mu > 0.0)) fail("c_bar + mu must be positive");
        }

    // the trajectory subproblem models flight energy as an epigraph, which
    // needs cruising to cost at least as much as hovering
    if (p.kappa > 0.0 && propulsion_power(p.v0, p) < hover_power(p) - 1e-12)
        fail("cruise power at v0 is below hover power; trajectory optimization "
             "requires p_fly(v0) >= p_hov");
}

Decision straight_line_init(const Scenario& s) {
    Decision d;
    d.w = Trajectory(s.M, s.T);
    for (int m = 0; m < s.M; ++m)
        for (int t = 0; t < s.T; ++t) {
            const double f = s.T > 1 ? static_cast<double>(t) / (s.T - 1) : 0.0;
            d.w(m, t) = s.uav_start[m] + f * (s.uav_end[m] - s.uav_start[m]);
        }
    d.lambda = Assignment(s.I, s.M, s.T, 0);
    d.rho = Grid2<double>(s.I, s.T, 0.0);
    d.aux1 = Grid2<CvarVals>(s.I, s.T);
    d.aux2 = Grid2<CvarVals>(s.I, s.T);
    return d;
}

void check_decision_invariants(const Scenario& s, const Decision& d) {
    const NetworkParams& p = s.params;
    auto fail = [](const std::string& msg) { throw ValidationError("decision: " + msg); };
    const double tol = 1e-7;

    if (d.w.rows() != s.M || d.w.cols() != s.T) fail("trajectory grid must be M x T");
    if (d.rho.rows() != s.I || d.rho.cols() != s.T) fail("rho grid must be I x T");

    for (int i = 0; i < s.I; ++i)
        for (int t = 0; t < s.T; ++t) {
            int count = 0;
            for (int m = 0; m < s.M; ++m) count += d.lambda(i, m, t) ? 1 : 0;
            if (count > 1) fail("GU " + std::to_string(i) + " connects to several UAVs in slot " +
                                std::to_string(t));
            if (d.rho(i, t) < -tol || d.rho(i, t) > 1.0 + tol) fail("rho outside [0,1]");
            if (d.rho(i, t) > count + tol) fail("rho positive without an assignment");
        }
    for (int m = 0; m < s.M; ++m)
        for (int t = 0; t < s.T; ++t) {
            int count = 0;
            for (int i = 0; i < s.I; ++i) count += d.lambda(i, m, t) ? 1 : 0;
            if (count > p.m_max)
                fail("UAV " + std::to_string(m) + " exceeds M_max in slot " + std::to_string(t));
        }
    for (int m = 0; m < s.M; ++m) {
        if ((d.w(m, 0) - s.uav_start[m]).norm() > tol) fail("trajectory must start at w_ini");
        if ((d.w(m, s.T - 1) - s.uav_end[m]).norm() > tol) fail("trajectory must end at w_fin");
        for (int t = 0; t < s.T; ++t) {
            const Vec2& w = d.w(m, t);
            if (w[0] < p.x_min - tol || w[0] > p.x_max + tol || w[1] < p.y_min - tol ||
                w[1] > p.y_max + tol)
                fail("trajectory leaves the area bounds");
            if (t > 0 && (d.w(m, t) - d.w(m, t - 1)).norm() > p.v0 * p.tau * (1.0 + 1e-9) + tol)
                fail("per-slot displacement exceeds v0*tau");
        }
    }
}

}  // namespace uavmec
