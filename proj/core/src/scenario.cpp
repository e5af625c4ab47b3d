#include "vreg/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace vreg {

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

/// One parsed `key = value` entry with its source location.
struct Entry {
    std::string value;
    std::string where;  // "file:line" or "override"
    bool used = false;
};

/// Section name -> keys. Section names are normalized ("dc 22").
using Doc = std::map<std::string, std::map<std::string, Entry>>;

const std::map<std::string, std::vector<std::string>>& schema() {
    static const std::map<std::string, std::vector<std::string>> s = {
        {"feeder", {"source", "slack_bus", "base_mva", "base_kv"}},
        {"sim", {"dt_sim_s", "dt_ctrl_s", "duration_s", "seed", "burn_in_s"}},
        {"control",
         {"controller", "gain", "deadband_pu", "dq_max_pu", "amp_window_s",
          "bias_window_s", "eta_bias", "actuated"}},
        {"background", {"p_pu"}},
        {"dc",
         {"trace", "scale_pu_per_watt", "p_comm_pu", "p_comp_pu", "w_comm_pu",
          "w_comp_pu", "period_comm_s", "period_comp_s", "seed"}},
        {"smoothing",
         {"enabled", "start_s", "k_p", "horizon_s", "backup_s", "soc_init",
          "soc_min", "soc_max"}},
    };
    return s;
}

std::string section_type(const std::string& section) {
    auto space = section.find(' ');
    return space == std::string::npos ? section : section.substr(0, space);
}

bool key_in_schema(const std::string& section, const std::string& key) {
    auto it = schema().find(section_type(section));
    if (it == schema().end()) return false;
    return std::find(it->second.begin(), it->second.end(), key) != it->second.end();
}

class Collector {
public:
    void add(const std::string& msg) { problems_.push_back(msg); }
    void raise_if_any(const std::string& origin) const {
        if (problems_.empty()) return;
        std::string msg = origin + ": invalid scenario config:";
        for (const auto& p : problems_) msg += "\n  - " + p;
        throw ConfigError(msg);
    }

private:
    std::vector<std::string> problems_;
};

struct Reader {
    Doc& doc;
    Collector& errors;

    Entry* find(const std::string& section, const std::string& key) {
        auto s = doc.find(section);
        if (s == doc.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        k->second.used = true;
        return &k->second;
    }

    std::optional<double> number(const std::string& section, const std::string& key) {
        Entry* e = find(section, key);
        if (!e) return std::nullopt;
        try {
            std::size_t pos = 0;
            double d = std::stod(e->value, &pos);
            if (pos != e->value.size()) throw std::invalid_argument("trailing");
            return d;
        } catch (const std::exception&) {
            errors.add("[" + section + "] " + key + ": not a number: '" + e->value +
                       "' (" + e->where + ")");
            return std::nullopt;
        }
    }

    std::optional<long long> integer(const std::string& section, const std::string& key) {
        Entry* e = find(section, key);
        if (!e) return std::nullopt;
        try {
            std::size_t pos = 0;
            long long v = std::stoll(e->value, &pos);
            if (pos != e->value.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            errors.add("[" + section + "] " + key + ": not an integer: '" + e->value +
                       "' (" + e->where + ")");
            return std::nullopt;
        }
    }

    std::optional<bool> boolean(const std::string& section, const std::string& key) {
        Entry* e = find(section, key);
        if (!e) return std::nullopt;
        std::string v = e->value;
        std::transform(v.begin(), v.end(), v.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "off" || v == "0" || v == "no") return false;
        errors.add("[" + section + "] " + key + ": not a boolean: '" + e->value +
                   "' (" + e->where + ")");
        return std::nullopt;
    }

    std::optional<std::string> text(const std::string& section, const std::string& key) {
        Entry* e = find(section, key);
        if (!e) return std::nullopt;
        return e->value;
    }
};

Doc parse_doc(const std::string& text, const std::string& origin, Collector& errors) {
    Doc doc;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::string line = trim(raw);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);

        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.add("unterminated section header (" + where + ")");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            // Collapse internal whitespace: "dc   22" -> "dc 22".
            std::istringstream parts(section);
            std::string tok, norm;
            while (parts >> tok) {
                if (!norm.empty()) norm += ' ';
                norm += tok;
            }
            section = norm;
            if (!schema().count(section_type(section))) {
                errors.add("unknown section [" + section + "] (" + where + ")");
            }
            if (section_type(section) == "dc") {
                std::istringstream head(section);
                std::string dc_word, bus_word, extra;
                head >> dc_word;
                if (!(head >> bus_word) || (head >> extra)) {
                    errors.add("[dc] section needs exactly one bus id (" + where + ")");
                }
            }
            doc[section];  // register even if empty
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.add("expected 'key = value' (" + where + ")");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) {
            errors.add("key '" + key + "' outside any section (" + where + ")");
            continue;
        }
        if (!key_in_schema(section, key)) {
            errors.add("unknown key '" + key + "' in [" + section + "] (" + where + ")");
            continue;
        }
        doc[section][key] = Entry{value, where};
    }
    return doc;
}

void apply_overrides(Doc& doc, const std::vector<std::string>& overrides,
                     Collector& errors) {
    for (const std::string& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos) {
            errors.add("override '" + ov + "': expected key=value");
            continue;
        }
        std::string key = trim(ov.substr(0, eq));
        const std::string value = trim(ov.substr(eq + 1));

        std::string section;
        auto dot = key.rfind('.');
        if (dot != std::string::npos) {
            section = trim(key.substr(0, dot));
            key = trim(key.substr(dot + 1));
            // "dc22" -> "dc 22"
            if (section.size() > 2 && section.rfind("dc", 0) == 0 &&
                std::isdigit(static_cast<unsigned char>(section[2]))) {
                section = "dc " + section.substr(2);
            }
            if (!schema().count(section_type(section))) {
                errors.add("override '" + ov + "': unknown section [" + section + "]");
                continue;
            }
            if (!key_in_schema(section, key)) {
                errors.add("override '" + ov + "': unknown key '" + key + "' for [" +
                           section + "]");
                continue;
            }
            doc[section][key] = Entry{value, "override"};
            continue;
        }

        // Bare key: must resolve to exactly one section, either one already
        // holding the key or one uniquely accepting it.
        std::vector<std::string> hits;
        for (auto& [sec, kv] : doc) {
            if (kv.count(key)) hits.push_back(sec);
        }
        if (hits.empty()) {
            for (auto& [sec, kv] : doc) {
                if (key_in_schema(sec, key)) hits.push_back(sec);
            }
        }
        if (hits.empty()) {
            errors.add("override '" + ov + "': no section accepts key '" + key + "'");
        } else if (hits.size() > 1) {
            std::string msg = "override '" + ov + "': ambiguous key '" + key +
                              "' (candidates:";
            for (const auto& h : hits) msg += " [" + h + "]";
            errors.add(msg + "); qualify as section.key");
        } else {
            doc[hits[0]][key] = Entry{value, "override"};
        }
    }
}

ScenarioConfig build_config(Doc& doc, const std::string& base_dir, Collector& errors) {
    Reader rd{doc, errors};
    ScenarioConfig cfg;

    if (auto v = rd.text("feeder", "source")) {
        cfg.feeder.source = *v;
        if (*v != "ieee33") {
            std::filesystem::path p(*v);
            if (p.is_relative()) cfg.feeder.source = (std::filesystem::path(base_dir) / p).string();
        }
    }
    if (auto v = rd.integer("feeder", "slack_bus")) cfg.feeder.slack_bus = static_cast<int>(*v);
    if (auto v = rd.number("feeder", "base_mva")) cfg.feeder.base_mva = *v;
    if (auto v = rd.number("feeder", "base_kv")) cfg.feeder.base_kv = *v;

    if (auto v = rd.number("sim", "dt_sim_s")) cfg.dt_sim = *v;
    if (auto v = rd.number("sim", "dt_ctrl_s")) cfg.dt_ctrl = *v;
    if (auto v = rd.number("sim", "duration_s")) cfg.duration = *v;
    if (auto v = rd.number("sim", "burn_in_s")) cfg.burn_in_s = *v;
    if (auto v = rd.integer("sim", "seed")) cfg.seed = static_cast<std::uint64_t>(*v);

    if (auto v = rd.text("control", "controller")) {
        if (*v == "fixed") cfg.control.kind = ControllerKind::Fixed;
        else if (*v == "switching") cfg.control.kind = ControllerKind::Switching;
        else if (*v == "oracle") cfg.control.kind = ControllerKind::Oracle;
        else errors.add("[control] controller: expected fixed|switching|oracle, got '" + *v + "'");
    }
    if (auto v = rd.text("control", "gain")) {
        if (*v == "auto") {
            cfg.control.gain_auto = true;
        } else {
            cfg.control.gain_auto = false;
            try {
                std::size_t pos = 0;
                cfg.control.gain = std::stod(*v, &pos);
                if (pos != v->size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                errors.add("[control] gain: expected a number or 'auto', got '" + *v + "'");
            }
        }
    }
    if (auto v = rd.number("control", "deadband_pu")) cfg.control.limits.deadband = *v;
    if (auto v = rd.number("control", "dq_max_pu")) cfg.control.limits.dq_max = *v;
    if (auto v = rd.number("control", "amp_window_s")) cfg.control.amp_window_s = *v;
    if (auto v = rd.number("control", "bias_window_s")) cfg.control.bias_window_s = *v;
    if (auto v = rd.number("control", "eta_bias")) cfg.control.eta_bias = *v;
    if (auto v = rd.text("control", "actuated")) {
        if (*v != "all") {
            std::istringstream list(*v);
            std::string tok;
            while (std::getline(list, tok, ',')) {
                tok = trim(tok);
                try {
                    std::size_t pos = 0;
                    cfg.control.actuated.push_back(std::stoi(tok, &pos));
                    if (pos != tok.size()) throw std::invalid_argument("trailing");
                } catch (const std::exception&) {
                    errors.add("[control] actuated: bad bus id '" + tok + "'");
                }
            }
        }
    }

    if (auto v = rd.number("background", "p_pu")) cfg.background_p = *v;

    for (auto& [sec, kv] : doc) {
        if (section_type(sec) != "dc") continue;
        TraceSpec dc;
        std::istringstream head(sec);
        std::string word, bus;
        head >> word >> bus;
        try {
            dc.bus_id = std::stoi(bus);
        } catch (const std::exception&) {
            errors.add("[" + sec + "]: bus id is not an integer");
            continue;
        }
        auto trace = rd.text(sec, "trace");
        if (!trace) {
            errors.add("[" + sec + "] trace: required (either 'synthetic' or a CSV path)");
            continue;
        }
        if (*trace == "synthetic") {
            dc.synthetic = true;
            if (auto v = rd.number(sec, "p_comm_pu")) dc.profile.p_comm = *v;
            else errors.add("[" + sec + "] p_comm_pu: required for synthetic traces");
            if (auto v = rd.number(sec, "p_comp_pu")) dc.profile.p_comp = *v;
            else errors.add("[" + sec + "] p_comp_pu: required for synthetic traces");
            if (auto v = rd.number(sec, "w_comm_pu")) dc.profile.w_comm = *v;
            if (auto v = rd.number(sec, "w_comp_pu")) dc.profile.w_comp = *v;
            if (auto v = rd.number(sec, "period_comm_s")) dc.profile.period_comm = *v;
            else errors.add("[" + sec + "] period_comm_s: required for synthetic traces");
            if (auto v = rd.number(sec, "period_comp_s")) dc.profile.period_comp = *v;
            else errors.add("[" + sec + "] period_comp_s: required for synthetic traces");
            if (auto v = rd.integer(sec, "seed")) dc.profile.seed = static_cast<std::uint64_t>(*v);
        } else {
            dc.synthetic = false;
            std::filesystem::path p(*trace);
            dc.csv_path = p.is_relative()
                ? (std::filesystem::path(base_dir) / p).string() : p.string();
            if (auto v = rd.number(sec, "scale_pu_per_watt")) dc.scale = *v;
            else errors.add("[" + sec + "] scale_pu_per_watt: required for CSV traces");
        }
        cfg.dcs.push_back(std::move(dc));
    }

    if (auto v = rd.boolean("smoothing", "enabled")) cfg.smoothing.enabled = *v;
    if (auto v = rd.number("smoothing", "start_s")) cfg.smoothing.start_s = *v;
    if (auto v = rd.number("smoothing", "k_p")) cfg.smoothing.k_p = *v;
    if (auto v = rd.number("smoothing", "horizon_s")) cfg.smoothing.horizon_s = *v;
    if (auto v = rd.number("smoothing", "backup_s")) cfg.smoothing.backup_s = *v;
    if (auto v = rd.number("smoothing", "soc_init")) cfg.smoothing.soc_init = *v;
    if (auto v = rd.number("smoothing", "soc_min")) cfg.smoothing.soc_min = *v;
    if (auto v = rd.number("smoothing", "soc_max")) cfg.smoothing.soc_max = *v;

    for (auto& [sec, kv] : doc) {
        for (auto& [key, entry] : kv) {
            if (!entry.used) {
                errors.add("[" + sec + "] " + key + ": not applicable here (" +
                           entry.where + ")");
            }
        }
    }
    return cfg;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& origin,
                              const std::string& base_dir,
                              const std::vector<std::string>& overrides) {
    Collector errors;
    Doc doc = parse_doc(text, origin, errors);
    apply_overrides(doc, overrides, errors);
    ScenarioConfig cfg = build_config(doc, base_dir, errors);
    errors.raise_if_any(origin);
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path,
                             const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path + ": cannot open config file");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string dir = std::filesystem::path(path).parent_path().string();
    return parse_scenario(buf.str(), path, dir.empty() ? "." : dir, overrides);
}

}  // namespace vreg
