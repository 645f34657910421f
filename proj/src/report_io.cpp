#include <charconv>
#include <cmath>
#include <sstream>

#include "weaktomo/experiment.hpp"

namespace weaktomo {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string &field) {
    const bool quote = field.find_first_of(",\"\r\n") != std::string::npos ||
                       (!field.empty() && (field.front() == ' ' || field.back() == ' '));
    if (!quote) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

std::string write_csv(const std::vector<std::vector<std::string>> &rows) {
    std::string out;
    for (const auto &row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(row[i]);
        }
        out += "\r\n";
    }
    return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string &text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(row);
        row.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
            continue;
        }
        if (ch == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (ch == ',') {
            end_field();
        } else if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            end_row();
            ++i;
        } else if (ch == '\n') {
            end_row();
        } else {
            field += ch;
            field_started = true;
        }
    }
    if (quoted) fail(ErrorCode::ConfigError, "csv: unterminated quoted field");
    if (field_started || !row.empty()) end_row();
    return rows;
}

namespace {

std::string escape_pointer_token(const std::string &key) {
    std::string out;
    for (char ch : key) {
        if (ch == '~') out += "~0";
        else if (ch == '/') out += "~1";
        else out += ch;
    }
    return out;
}

void flatten(const json &j, const std::string &path, std::vector<std::vector<std::string>> &rows) {
    switch (j.type()) {
        case json::value_t::object:
            if (j.empty()) rows.push_back({path, "object", ""});
            for (const auto &item : j.items()) flatten(item.value(), path + "/" + escape_pointer_token(item.key()), rows);
            break;
        case json::value_t::array:
            if (j.empty()) rows.push_back({path, "array", ""});
            for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], path + "/" + std::to_string(i), rows);
            break;
        case json::value_t::string: rows.push_back({path, "string", j.get<std::string>()}); break;
        case json::value_t::boolean: rows.push_back({path, "boolean", j.get<bool>() ? "true" : "false"}); break;
        case json::value_t::number_unsigned: rows.push_back({path, "unsigned", std::to_string(j.get<std::uint64_t>())}); break;
        case json::value_t::number_integer: rows.push_back({path, "integer", std::to_string(j.get<std::int64_t>())}); break;
        case json::value_t::number_float: rows.push_back({path, "number", format_double(j.get<double>())}); break;
        case json::value_t::null: rows.push_back({path, "null", ""}); break;
        default: fail(ErrorCode::ConfigError, "csv: unsupported JSON value at " + path);
    }
}

template <typename T>
T parse_number(const std::string &s, const std::string &path) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(ErrorCode::ConfigError, "csv: bad number at " + path);
    return v;
}

}  // namespace

std::string json_to_csv(const json &j) {
    std::vector<std::vector<std::string>> rows{{"path", "type", "value"}};
    flatten(j, "", rows);
    return write_csv(rows);
}

json json_from_csv(const std::string &text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows[0] != std::vector<std::string>{"path", "type", "value"}) {
        fail(ErrorCode::ConfigError, "csv: missing header row path,type,value");
    }
    json out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto &row = rows[i];
        if (row.size() != 3) fail(ErrorCode::ConfigError, "csv: row " + std::to_string(i + 1) + " does not have 3 fields");
        const std::string &path = row[0], &type = row[1], &value = row[2];
        json v;
        if (type == "object") v = json::object();
        else if (type == "array") v = json::array();
        else if (type == "string") v = value;
        else if (type == "boolean") v = (value == "true");
        else if (type == "unsigned") v = parse_number<std::uint64_t>(value, path);
        else if (type == "integer") v = parse_number<std::int64_t>(value, path);
        else if (type == "number") v = parse_number<double>(value, path);
        else if (type == "null") v = nullptr;
        else fail(ErrorCode::ConfigError, "csv: unknown type '" + type + "'");
        if (path.empty()) {
            out = v;
        } else {
            out[json::json_pointer(path)] = v;
        }
    }
    return out;
}

std::string scan_to_csv(const ScanReport &r) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"index"};
    for (int i = 0; i < r.dim; ++i) header.push_back("c2_" + std::to_string(i));
    for (const char *h : {"analytic_volume", "empirical_volume", "empirical_volume_std_error", "argmin"}) header.emplace_back(h);
    rows.push_back(header);
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
        const ScanRow &row = r.rows[k];
        std::vector<std::string> out{std::to_string(k)};
        for (double w : row.weights) out.push_back(format_double(w));
        out.push_back(format_double(row.analytic_volume));
        out.push_back(row.empirical_volume ? format_double(*row.empirical_volume) : "");
        out.push_back(row.empirical_volume_std_error ? format_double(*row.empirical_volume_std_error) : "");
        out.push_back(row.argmin ? "1" : "0");
        rows.push_back(out);
    }
    return write_csv(rows);
}

std::vector<ScanRow> scan_rows_from_csv(const std::string &text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows[0].empty() || rows[0][0] != "index") fail(ErrorCode::ConfigError, "csv: missing scan header");
    const std::size_t cols = rows[0].size();
    if (cols < 6) fail(ErrorCode::ConfigError, "csv: scan header too short");
    const std::size_t dim = cols - 5;
    std::vector<ScanRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto &row = rows[i];
        if (row.size() != cols) fail(ErrorCode::ConfigError, "csv: scan row " + std::to_string(i + 1) + " has wrong width");
        ScanRow s;
        for (std::size_t k = 0; k < dim; ++k) s.weights.push_back(parse_number<double>(row[1 + k], "weight"));
        s.analytic_volume = parse_number<double>(row[1 + dim], "analytic_volume");
        if (!row[2 + dim].empty()) s.empirical_volume = parse_number<double>(row[2 + dim], "empirical_volume");
        if (!row[3 + dim].empty()) s.empirical_volume_std_error = parse_number<double>(row[3 + dim], "empirical_volume_std_error");
        s.argmin = row[4 + dim] == "1";
        out.push_back(s);
    }
    return out;
}

}  // namespace weaktomo
