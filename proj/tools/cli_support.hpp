#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace nonlocal::cli {

using nlohmann::json;

// Field types understood by the config validator:
// number, integer, boolean, string, number_list (a number is promoted), point, point_list,
// string_list, bump_list, object.
struct Field {
    std::string name;
    std::string type;
    json def;
    std::string doc;
    std::vector<std::string> choices;  // allowed strings for string / string_list
};

struct Schema {
    std::string command;  // "audit", "kernel_eval", ...
    std::string doc;
    std::vector<Field> fields;
    std::vector<std::string> required;

    const Field* find(const std::string& name) const;
    json json_schema() const;
    std::string diagnostics() const;  // one line per field
};

// Validates j against s and fills defaults; throws ConfigError naming the first problem.
json validate(const Schema& s, const json& j);

// Converts a command line string to a JSON value of the field's type.
json parse_flag(const Field& f, const std::string& text);

std::uint64_t fnv1a(const std::string& bytes);
std::string config_hash(const std::string& command, const json& config);

using Cell = std::variant<std::string, double, long long, bool>;

class Table {
public:
    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}
    void add(std::vector<Cell> row);
    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::vector<Cell>>& rows() const { return rows_; }

    // Header comment, column row, then one line per row; doubles as %.16e (17 significant digits).
    void write_csv(std::ostream& os, const std::string& command, const std::string& hash) const;
    json to_json() const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

std::string format_double(double v);
std::string version();

}  // namespace nonlocal::cli
