#include "pssmp/model_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "pssmp/errors.hpp"

namespace pssmp {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_model(const LevyModel& m) {
    std::ostringstream out;
    out << "sigma2 = " << format_double(m.sigma2()) << "\n";
    out << "mu_tilde = " << format_double(m.mu_tilde()) << "\n";
    out << "jumps = [";
    for (std::size_t i = 0; i < m.jumps().size(); ++i) {
        if (i) out << ", ";
        out << "[" << format_double(m.jumps()[i].a) << ", "
            << format_double(m.jumps()[i].b) << "]";
    }
    out << "]\n";
    out << "p = " << format_double(m.killing_rate()) << "\n";
    out << "alpha = " << format_double(m.alpha()) << "\n";
    return out.str();
}

namespace {

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& s, int line_no) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ModelError("line " + std::to_string(line_no) +
                         ": expected a number, got '" + s + "'");
    }
    if (strip(s.substr(pos)) != "")
        throw ModelError("line " + std::to_string(line_no) +
                         ": trailing junk after number in '" + s + "'");
    return v;
}

std::vector<JumpComponent> parse_jumps(const std::string& s, int line_no) {
    std::vector<JumpComponent> jumps;
    std::string t = strip(s);
    if (t.empty() || t.front() != '[' || t.back() != ']')
        throw ModelError("line " + std::to_string(line_no) +
                         ": jumps must look like [[a, b], ...]");
    t = strip(t.substr(1, t.size() - 2));
    if (t.empty()) return jumps;  // no jump part
    std::size_t i = 0;
    while (i < t.size()) {
        if (t[i] != '[')
            throw ModelError("line " + std::to_string(line_no) +
                             ": expected '[' in jumps list");
        std::size_t close = t.find(']', i);
        if (close == std::string::npos)
            throw ModelError("line " + std::to_string(line_no) +
                             ": unterminated pair in jumps list");
        std::string pair = t.substr(i + 1, close - i - 1);
        std::size_t comma = pair.find(',');
        if (comma == std::string::npos)
            throw ModelError("line " + std::to_string(line_no) +
                             ": jump pair needs two numbers");
        jumps.push_back({parse_number(strip(pair.substr(0, comma)), line_no),
                         parse_number(strip(pair.substr(comma + 1)), line_no)});
        i = close + 1;
        while (i < t.size() && (t[i] == ',' || std::isspace((unsigned char)t[i])))
            ++i;
    }
    return jumps;
}

}  // namespace

LevyModel parse_model(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::map<std::string, int> key_line;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = strip(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ModelError("line " + std::to_string(line_no) +
                             ": expected 'key = value'");
        std::string key = strip(line.substr(0, eq));
        if (kv.count(key))
            throw ModelError("line " + std::to_string(line_no) +
                             ": duplicate key '" + key + "'");
        kv[key] = strip(line.substr(eq + 1));
        key_line[key] = line_no;
    }
    for (const auto& [key, value] : kv) {
        (void)value;
        if (key != "sigma2" && key != "mu_tilde" && key != "jumps" &&
            key != "p" && key != "alpha")
            throw ModelError("unknown key '" + key + "'");
    }
    auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end())
            throw ModelError(std::string("missing key '") + key + "'");
        return it->second;
    };
    return LevyModel(parse_number(need("sigma2"), key_line["sigma2"]),
                     parse_number(need("mu_tilde"), key_line["mu_tilde"]),
                     parse_jumps(need("jumps"), key_line["jumps"]),
                     parse_number(need("p"), key_line["p"]),
                     parse_number(need("alpha"), key_line["alpha"]));
}

LevyModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

void save_model_file(const LevyModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ModelError("cannot write model file: " + path);
    out << format_model(m);
}

std::string model_hash(const LevyModel& m) {
    std::string s = format_model(m);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return buf;
}

std::string scale_set_csv(const LevyModel& m, const ScaleCurve& w,
                          const ScaleCurve& z) {
    std::ostringstream out;
    out << "# model = " << model_hash(m) << "\n";
    out << "# q = " << format_double(w.q) << "\n";
    out << "# theta = " << format_double(z.theta) << "\n";
    out << "# h = " << format_double(w.h()) << "\n";
    out << "# n_terms = " << w.report.n_terms << "," << z.report.n_terms << "\n";
    out << "# trunc_bound = " << format_double(w.report.trunc_bound) << ","
        << format_double(z.report.trunc_bound) << "\n";
    out << "y,W,Wd,Z,Zd\n";
    for (std::size_t k = 0; k < w.val.size(); ++k) {
        double y = std::exp(w.x(k));
        out << format_double(y) << "," << format_double(w.val[k]) << ","
            << format_double(w.dval[k]) << "," << format_double(z.val[k]) << ","
            << format_double(z.dval[k]) << "\n";
    }
    return out.str();
}

std::string log_grid_csv(const LogGrid& g, const ScaleFunction& f) {
    std::ostringstream out;
    out << "# kind = " << (f.kind == ScaleFunction::Kind::W ? "W" : "Z") << "\n";
    out << "# q = " << format_double(f.q) << "\n";
    out << "# theta = " << format_double(f.theta) << "\n";
    out << "x,value\n";
    for (std::size_t k = 0; k < g.values.size(); ++k)
        out << format_double(g.x(k)) << "," << format_double(g.values[k]) << "\n";
    return out.str();
}

}  // namespace pssmp
