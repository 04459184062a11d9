#include "csvl/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "csvl/errors.hpp"

namespace csvl {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
    std::ostringstream os;
    os << "config line " << line << ": " << what;
    throw invalid_configuration_error(os.str());
}

std::vector<double> numbers(const std::string& value, int line, std::size_t expect = 0) {
    std::istringstream is(value);
    std::vector<double> out;
    double x;
    while (is >> x) out.push_back(x);
    std::string rest;
    if (is.clear(), is >> rest) fail(line, "trailing token '" + rest + "'");
    if (expect != 0 && out.size() != expect) fail(line, "expected " + std::to_string(expect) + " numbers");
    if (out.empty()) fail(line, "expected a numeric value");
    return out;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

int ExperimentConfig::N() const {
    int n_total = 0;
    for (int m : multiplicities) n_total += m;
    return n_total;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.eps_schedule.clear();
    std::map<int, std::pair<Vec2, int>> vortices; // index -> (point, multiplicity)
    std::map<int, Vec2> seeds;
    double eps_start = 0.0, eps_end = 0.0;
    int eps_count = 0;

    std::istringstream is(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        std::string s = trim(raw);
        std::size_t hash = s.find('#');
        if (hash != std::string::npos) s = trim(s.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) fail(line, "expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty() || value.empty()) fail(line, "empty key or value");

        if (section == "domain") {
            if (key == "L1") cfg.L1 = numbers(value, line, 1)[0];
            else if (key == "L2") cfg.L2 = numbers(value, line, 1)[0];
            else if (key == "n") cfg.n = static_cast<int>(numbers(value, line, 1)[0]);
            else if (key == "offset_x") cfg.offset_x = numbers(value, line, 1)[0];
            else if (key == "offset_y") cfg.offset_y = numbers(value, line, 1)[0];
            else fail(line, "unknown domain key '" + key + "'");
        } else if (section == "vortices") {
            if (key.size() < 2 || key[0] != 'p') fail(line, "vortex keys look like p1, p2, ...");
            int idx = std::atoi(key.c_str() + 1);
            if (idx <= 0) fail(line, "bad vortex index in '" + key + "'");
            std::vector<double> v = numbers(value, line);
            if (v.size() != 2 && v.size() != 3) fail(line, "vortex value is x y [multiplicity]");
            int mult = v.size() == 3 ? static_cast<int>(v[2]) : 1;
            if (mult < 1) fail(line, "multiplicity must be positive");
            vortices[idx] = {{v[0], v[1]}, mult};
        } else if (section == "bubbles") {
            if (key == "d") cfg.d = numbers(value, line, 1)[0];
            else if (key == "alpha") cfg.alpha = numbers(value, line, 1)[0];
            else if (key == "delta") cfg.delta = numbers(value, line, 1)[0];
            else if (key[0] == 'q') {
                int idx = std::atoi(key.c_str() + 1);
                if (idx <= 0) fail(line, "bad seed index in '" + key + "'");
                std::vector<double> v = numbers(value, line, 2);
                seeds[idx] = {v[0], v[1]};
            } else fail(line, "unknown bubbles key '" + key + "'");
        } else if (section == "sweep") {
            if (key == "eps") cfg.eps_schedule = numbers(value, line);
            else if (key == "eps_start") eps_start = numbers(value, line, 1)[0];
            else if (key == "eps_end") eps_end = numbers(value, line, 1)[0];
            else if (key == "eps_count") eps_count = static_cast<int>(numbers(value, line, 1)[0]);
            else if (key == "beta0") cfg.beta0 = numbers(value, line, 1)[0];
            else if (key == "beta1") cfg.beta1 = numbers(value, line, 1)[0];
            else fail(line, "unknown sweep key '" + key + "'");
        } else if (section == "tolerances") {
            if (key == "newton_tol") cfg.newton_tol = numbers(value, line, 1)[0];
            else if (key == "tol_reduced") cfg.tol_reduced = numbers(value, line, 1)[0];
            else if (key == "quad_levels") cfg.quad_levels = static_cast<int>(numbers(value, line, 1)[0]);
            else fail(line, "unknown tolerances key '" + key + "'");
        } else if (section == "output") {
            if (key == "directory") cfg.directory = value;
            else fail(line, "unknown output key '" + key + "'");
        } else {
            fail(line, section.empty() ? "key before any [section]" : "unknown section '" + section + "'");
        }
    }

    for (const auto& [idx, pv] : vortices) {
        cfg.vortex_points.push_back(pv.first);
        cfg.multiplicities.push_back(pv.second);
    }
    for (const auto& [idx, p] : seeds) cfg.bubble_seeds.push_back(p);

    if (cfg.eps_schedule.empty() && eps_count > 0) {
        if (!(eps_start > eps_end && eps_end > 0.0))
            throw invalid_configuration_error("config: eps range must satisfy start > end > 0");
        for (int i = 0; i < eps_count; ++i) {
            double t = eps_count == 1 ? 0.0 : static_cast<double>(i) / (eps_count - 1);
            cfg.eps_schedule.push_back(
                std::exp(std::log(eps_start) + t * (std::log(eps_end) - std::log(eps_start))));
        }
    }

    if (cfg.n < 8) throw invalid_configuration_error("config: grid n must be at least 8");
    if (!(cfg.L1 > 0.0 && cfg.L2 > 0.0))
        throw invalid_configuration_error("config: periods must be positive");
    if (cfg.vortex_points.empty()) throw invalid_configuration_error("config: no vortex points");
    if (cfg.bubble_seeds.empty()) throw invalid_configuration_error("config: no bubble seeds");
    if (cfg.N() != 2 * cfg.k()) {
        std::ostringstream os;
        os << "config: vortex number N = " << cfg.N() << " must equal 2k = " << 2 * cfg.k();
        throw invalid_configuration_error(os.str());
    }
    for (double e : cfg.eps_schedule)
        if (!(e > 0.0)) throw invalid_configuration_error("config: eps values must be positive");
    for (std::size_t i = 1; i < cfg.eps_schedule.size(); ++i)
        if (!(cfg.eps_schedule[i] < cfg.eps_schedule[i - 1]))
            throw invalid_configuration_error("config: eps schedule must be strictly decreasing");
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_configuration_error("config: cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str());
}

std::string emit_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "[domain]\n"
       << "L1 = " << fmt(cfg.L1) << "\n"
       << "L2 = " << fmt(cfg.L2) << "\n"
       << "n = " << cfg.n << "\n"
       << "offset_x = " << fmt(cfg.offset_x) << "\n"
       << "offset_y = " << fmt(cfg.offset_y) << "\n\n";
    os << "[vortices]\n";
    for (std::size_t i = 0; i < cfg.vortex_points.size(); ++i)
        os << "p" << (i + 1) << " = " << fmt(cfg.vortex_points[i].x) << " "
           << fmt(cfg.vortex_points[i].y) << " " << cfg.multiplicities[i] << "\n";
    os << "\n[bubbles]\n";
    for (std::size_t i = 0; i < cfg.bubble_seeds.size(); ++i)
        os << "q" << (i + 1) << " = " << fmt(cfg.bubble_seeds[i].x) << " "
           << fmt(cfg.bubble_seeds[i].y) << "\n";
    os << "d = " << fmt(cfg.d) << "\n"
       << "alpha = " << fmt(cfg.alpha) << "\n"
       << "delta = " << fmt(cfg.delta) << "\n\n";
    os << "[sweep]\neps =";
    for (double e : cfg.eps_schedule) os << " " << fmt(e);
    os << "\nbeta0 = " << fmt(cfg.beta0) << "\nbeta1 = " << fmt(cfg.beta1) << "\n\n";
    os << "[tolerances]\n"
       << "newton_tol = " << fmt(cfg.newton_tol) << "\n"
       << "tol_reduced = " << fmt(cfg.tol_reduced) << "\n"
       << "quad_levels = " << cfg.quad_levels << "\n\n";
    os << "[output]\ndirectory = " << cfg.directory << "\n";
    return os.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::string text = emit_config(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace csvl
