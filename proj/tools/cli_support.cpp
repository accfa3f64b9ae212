#include "cli_support.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nonlocal/errors.hpp"

namespace nonlocal::cli {

namespace {

bool is_number_list(const json& v) {
    if (!v.is_array()) return false;
    for (const auto& e : v)
        if (!e.is_number()) return false;
    return true;
}

bool is_point(const json& v) { return is_number_list(v) && (v.size() == 2 || v.size() == 3); }

// Numbers are stored as doubles so that 1 and 1.0 hash alike.
json as_doubles(const json& v) {
    json out = json::array();
    for (const auto& e : v) out.push_back(e.get<double>());
    return out;
}

json normalize_point(const json& v) {
    json p = as_doubles(v);
    if (p.size() == 2) p.push_back(0.0);
    return p;
}

[[noreturn]] void bad(const std::string& cmd, const Field& f, const std::string& what) {
    throw ConfigError(cmd + ": field '" + f.name + "' " + what);
}

void check_choice(const std::string& cmd, const Field& f, const std::string& v) {
    if (f.choices.empty()) return;
    for (const auto& c : f.choices)
        if (c == v) return;
    std::string all;
    for (const auto& c : f.choices) all += (all.empty() ? "" : "|") + c;
    bad(cmd, f, "must be one of " + all + ", got '" + v + "'");
}

json coerce(const std::string& cmd, const Field& f, const json& v) {
    const auto& t = f.type;
    if (t == "number") {
        if (!v.is_number()) bad(cmd, f, "must be a number");
        return v.get<double>();
    }
    if (t == "integer") {
        if (!v.is_number_integer()) bad(cmd, f, "must be an integer");
        return v;
    }
    if (t == "boolean") {
        if (!v.is_boolean()) bad(cmd, f, "must be true or false");
        return v;
    }
    if (t == "string") {
        if (!v.is_string()) bad(cmd, f, "must be a string");
        check_choice(cmd, f, v.get<std::string>());
        return v;
    }
    if (t == "number_list") {
        if (v.is_number()) return json::array({v.get<double>()});
        if (!is_number_list(v)) bad(cmd, f, "must be a number or an array of numbers");
        return as_doubles(v);
    }
    if (t == "string_list") {
        json out = v.is_string() ? json::array({v}) : v;
        if (!out.is_array()) bad(cmd, f, "must be a string or an array of strings");
        for (const auto& e : out) {
            if (!e.is_string()) bad(cmd, f, "must contain strings only");
            check_choice(cmd, f, e.get<std::string>());
        }
        return out;
    }
    if (t == "point") {
        if (!is_point(v)) bad(cmd, f, "must be an array of 2 or 3 numbers");
        return normalize_point(v);
    }
    if (t == "point_list") {
        if (!v.is_array()) bad(cmd, f, "must be an array of points");
        json out = json::array();
        for (const auto& e : v) {
            if (!is_point(e)) bad(cmd, f, "must contain points of 2 or 3 numbers");
            out.push_back(normalize_point(e));
        }
        return out;
    }
    if (t == "bump_list") {
        if (!v.is_array()) bad(cmd, f, "must be an array of {center, width}");
        for (const auto& e : v) {
            if (!e.is_object() || e.size() != 2 || !e.contains("center") || !e.contains("width") ||
                !e["center"].is_number() || !e["width"].is_number())
                bad(cmd, f, "entries must be objects {\"center\": number, \"width\": number}");
        }
        json out = json::array();
        for (const auto& e : v)
            out.push_back({{"center", e["center"].get<double>()}, {"width", e["width"].get<double>()}});
        return out;
    }
    if (t == "object") {
        if (!v.is_object() && !v.is_null()) bad(cmd, f, "must be an object");
        return v;
    }
    bad(cmd, f, "has unknown schema type " + t);
}

json type_schema(const Field& f) {
    const json num = {{"type", "number"}};
    const json point = {{"type", "array"}, {"items", num}, {"minItems", 2}, {"maxItems", 3}};
    json s;
    if (f.type == "number" || f.type == "integer" || f.type == "boolean" || f.type == "string" ||
        f.type == "object") {
        s["type"] = f.type;
    } else if (f.type == "number_list") {
        s["oneOf"] = json::array({num, {{"type", "array"}, {"items", num}}});
    } else if (f.type == "string_list") {
        s["oneOf"] = json::array({{{"type", "string"}}, {{"type", "array"}, {"items", {{"type", "string"}}}}});
    } else if (f.type == "point") {
        s = point;
    } else if (f.type == "point_list") {
        s = {{"type", "array"}, {"items", point}};
    } else if (f.type == "bump_list") {
        s = {{"type", "array"},
             {"items",
              {{"type", "object"},
               {"required", {"center", "width"}},
               {"additionalProperties", false},
               {"properties", {{"center", num}, {"width", num}}}}}};
    }
    if (!f.choices.empty()) {
        if (f.type == "string")
            s["enum"] = f.choices;
        else
            s["oneOf"] = json::array({{{"enum", f.choices}}, {{"type", "array"}, {"items", {{"enum", f.choices}}}}});
    }
    return s;
}

}  // namespace

const Field* Schema::find(const std::string& name) const {
    for (const auto& f : fields)
        if (f.name == name) return &f;
    return nullptr;
}

json Schema::json_schema() const {
    json props = json::object();
    for (const auto& f : fields) {
        json p = type_schema(f);
        p["description"] = f.doc;
        if (!f.def.is_null()) p["default"] = f.def;
        props[f.name] = p;
    }
    json s = {{"$schema", "http://json-schema.org/draft-07/schema#"},
              {"title", command},
              {"description", doc},
              {"type", "object"},
              {"additionalProperties", false},
              {"properties", props}};
    if (!required.empty()) s["required"] = required;
    return s;
}

std::string Schema::diagnostics() const {
    std::ostringstream os;
    os << "expected a JSON object for '" << command << "' with keys:\n";
    for (const auto& f : fields) {
        os << "  " << f.name << " (" << f.type;
        if (!f.choices.empty()) {
            os << ":";
            for (std::size_t i = 0; i < f.choices.size(); ++i) os << (i ? "|" : " ") << f.choices[i];
        }
        os << ")";
        bool req = false;
        for (const auto& r : required) req = req || r == f.name;
        if (req)
            os << " required";
        else if (!f.def.is_null())
            os << " default " << f.def.dump();
        os << "  " << f.doc << "\n";
    }
    return os.str();
}

json validate(const Schema& s, const json& j) {
    if (!j.is_object()) throw ConfigError(s.command + ": config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!s.find(it.key())) throw ConfigError(s.command + ": unknown key '" + it.key() + "'");
    for (const auto& r : s.required)
        if (!j.contains(r) || j[r].is_null()) throw ConfigError(s.command + ": missing required key '" + r + "'");
    json out = json::object();
    for (const auto& f : s.fields) {
        if (j.contains(f.name) && !j[f.name].is_null())
            out[f.name] = coerce(s.command, f, j[f.name]);
        else
            out[f.name] = f.def.is_null() ? json() : coerce(s.command, f, f.def);
    }
    return out;
}

json parse_flag(const Field& f, const std::string& text) {
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) throw ConfigError("--" + f.name + ": '" + s + "' is not a number");
        return v;
    };
    auto split = [&] {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) parts.push_back(item);
        return parts;
    };
    const auto& t = f.type;
    if (t == "number") return number(text);
    if (t == "integer") {
        const double v = number(text);
        if (v != std::floor(v)) throw ConfigError("--" + f.name + ": '" + text + "' is not an integer");
        return static_cast<long long>(v);
    }
    if (t == "boolean") {
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw ConfigError("--" + f.name + ": expected true or false");
    }
    if (t == "string") return text;
    if (t == "number_list" || t == "point") {
        json a = json::array();
        for (const auto& p : split()) a.push_back(number(p));
        return a;
    }
    if (t == "string_list") {
        json a = json::array();
        for (const auto& p : split()) a.push_back(p);
        return a;
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("--" + f.name + ": invalid JSON: " + e.what());
    }
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const std::string& command, const json& config) {
    // Object keys are kept sorted by json, so the dump is canonical.
    const json doc = {{"command", command}, {"config", config}};
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(doc.dump()));
    return buf;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

std::string version() { return NONLOCAL_VERSION; }

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw std::logic_error("Table::add: row width does not match the header");
    rows_.push_back(std::move(row));
}

namespace {

std::string csv_cell(const Cell& c) {
    if (auto d = std::get_if<double>(&c)) return format_double(*d);
    if (auto i = std::get_if<long long>(&c)) return std::to_string(*i);
    if (auto b = std::get_if<bool>(&c)) return *b ? "1" : "0";
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

json json_cell(const Cell& c) {
    if (auto d = std::get_if<double>(&c)) return std::isfinite(*d) ? json(*d) : json(format_double(*d));
    if (auto i = std::get_if<long long>(&c)) return *i;
    if (auto b = std::get_if<bool>(&c)) return *b;
    return std::get<std::string>(c);
}

}  // namespace

void Table::write_csv(std::ostream& os, const std::string& command, const std::string& hash) const {
    os << "# version=" << version() << " command=" << command << " config_hash=" << hash << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << "\n";
    for (const auto& r : rows_) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_cell(r[i]);
        os << "\n";
    }
}

json Table::to_json() const {
    json rows = json::array();
    for (const auto& r : rows_) {
        json o = json::object();
        for (std::size_t i = 0; i < r.size(); ++i) o[columns_[i]] = json_cell(r[i]);
        rows.push_back(o);
    }
    return {{"columns", columns_}, {"rows", rows}};
}

}  // namespace nonlocal::cli
