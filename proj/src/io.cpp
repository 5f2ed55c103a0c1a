#include "blowup/io.hpp"

#include "blowup/error.hpp"
#include "blowup/expr.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace blowup {

namespace {

const std::string kConfigTag = "# config: ";

double parse_number(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw Error("bad number '" + text + "' in " + what);
    }
}

} // namespace

std::string RunConfig::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["flags"] = flags;
    return j.dump();
}

RunConfig RunConfig::from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        RunConfig c;
        c.command = j.at("command").get<std::string>();
        c.flags = j.at("flags").get<std::map<std::string, std::string>>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed config header: ") + e.what());
    }
}

void write_header(std::ostream& out, const RunConfig& config) {
    out << "# " << kToolName << ' ' << kToolVersion << '\n';
    out << kConfigTag << config.to_json() << '\n';
}

RunConfig read_header(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# " + std::string(kToolName) + ' ', 0) != 0) {
        throw Error("missing tool header line");
    }
    if (!std::getline(in, line) || line.rfind(kConfigTag, 0) != 0) throw Error("missing config header line");
    return RunConfig::from_json(std::string_view(line).substr(kConfigTag.size()));
}

void write_series_csv(std::ostream& out, const IntegralSeries& series) {
    out << "eps,value,err,converged\n";
    for (const auto& p : series.points) {
        out << format_double(p.eps) << ',' << format_double(p.value) << ',' << format_double(p.err) << ','
            << (p.converged ? 1 : 0) << '\n';
    }
}

IntegralSeries read_series_csv(std::istream& in) {
    IntegralSeries series;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != "eps,value,err,converged") throw Error("series CSV header must be 'eps,value,err,converged'");
            header = true;
            continue;
        }
        std::istringstream row(line);
        std::string cells[4];
        for (auto& c : cells) {
            if (!std::getline(row, c, ',')) throw Error("series CSV row '" + line + "' has too few columns");
        }
        SeriesPoint p;
        p.eps = parse_number(cells[0], "series CSV");
        p.value = parse_number(cells[1], "series CSV");
        p.err = parse_number(cells[2], "series CSV");
        if (cells[3] != "0" && cells[3] != "1") throw Error("converged column must be 0 or 1");
        p.converged = cells[3] == "1";
        series.points.push_back(p);
    }
    if (!header) throw Error("series CSV is empty");
    return series;
}

void write_diagnosis_report(std::ostream& out, const DivergenceDiagnosis& d, std::string_view prefix) {
    const std::string pre(prefix);
    out << pre << "classification=" << to_string(d.classification) << '\n';
    out << pre << "a=" << format_double(d.a) << '\n';
    out << pre << "b=" << format_double(d.b) << '\n';
    out << pre << "gamma=" << format_double(d.gamma) << '\n';
    out << pre << "se_b=" << format_double(d.se_b) << '\n';
    out << pre << "residual_constant=" << format_double(d.residual_constant) << '\n';
    out << pre << "residual_log=" << format_double(d.residual_log) << '\n';
    out << pre << "residual_power=" << format_double(d.residual_power) << '\n';
    out << pre << "growth_exponent=" << format_double(d.growth_exponent) << '\n';
}

std::vector<std::pair<std::string, std::string>> read_report(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("report line '" + line + "' is not key=value");
        entries.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    return entries;
}

DivergenceDiagnosis diagnosis_from_report(const std::vector<std::pair<std::string, std::string>>& entries,
                                          std::string_view prefix) {
    std::map<std::string, std::string> m;
    for (const auto& [k, v] : entries) {
        if (k.rfind(prefix, 0) == 0) m[k.substr(prefix.size())] = v;
    }
    auto get = [&m](const std::string& key) -> const std::string& {
        const auto it = m.find(key);
        if (it == m.end()) throw Error("report lacks key '" + key + "'");
        return it->second;
    };
    DivergenceDiagnosis d;
    d.classification = classification_from_string(get("classification"));
    d.a = parse_number(get("a"), "report");
    d.b = parse_number(get("b"), "report");
    d.gamma = parse_number(get("gamma"), "report");
    d.se_b = parse_number(get("se_b"), "report");
    d.residual_constant = parse_number(get("residual_constant"), "report");
    d.residual_log = parse_number(get("residual_log"), "report");
    d.residual_power = parse_number(get("residual_power"), "report");
    d.growth_exponent = parse_number(get("growth_exponent"), "report");
    return d;
}

void emit(const std::string& content, const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
        fallback << content;
        fallback.flush();
        return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot open output file '" + path + "'");
    file << content;
    file.close();
    if (!file) throw Error("failed writing output file '" + path + "'");
}

} // namespace blowup
