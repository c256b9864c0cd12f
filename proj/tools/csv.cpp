#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "sglq/errors.hpp"

namespace sglq::cli {

namespace {

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw InvalidInput("error reading '" + path + "'");
    return buf.str();
}

struct Record {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

std::vector<Record> split_records(const std::string& text, const std::string& source)
{
    std::vector<Record> records;
    std::size_t pos = 0;
    if (text.compare(0, 3, "\xEF\xBB\xBF") == 0) pos = 3;
    std::size_t line = 1;
    const std::size_t end = text.size();
    while (pos < end) {
        Record rec;
        rec.line = line;
        std::string field;
        bool done = false;
        while (!done) {
            field.clear();
            if (pos < end && text[pos] == '"') {
                const std::size_t open_line = line;
                ++pos;
                while (true) {
                    if (pos >= end) {
                        throw InvalidInput(source + ": unterminated quoted field starting on line " +
                                           std::to_string(open_line));
                    }
                    const char c = text[pos++];
                    if (c == '"') {
                        if (pos < end && text[pos] == '"') {
                            field += '"';
                            ++pos;
                        } else {
                            break;
                        }
                    } else {
                        if (c == '\n') ++line;
                        field += c;
                    }
                }
                if (pos < end && text[pos] != ',' && text[pos] != '\r' && text[pos] != '\n') {
                    throw InvalidInput(source + ": unexpected character after closing quote on line " +
                                       std::to_string(line));
                }
            } else {
                while (pos < end && text[pos] != ',' && text[pos] != '\r' && text[pos] != '\n') {
                    if (text[pos] == '"') {
                        throw InvalidInput(source + ": stray quote in unquoted field on line " +
                                           std::to_string(line));
                    }
                    field += text[pos++];
                }
            }
            rec.fields.push_back(field);
            if (pos >= end) {
                done = true;
            } else if (text[pos] == ',') {
                ++pos;
            } else {
                if (text[pos] == '\r') ++pos;
                if (pos < end && text[pos] == '\n') ++pos;
                ++line;
                done = true;
            }
        }
        const bool blank = rec.fields.size() == 1 && rec.fields[0].empty();
        if (!blank) records.push_back(std::move(rec));
    }
    return records;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

} // namespace

Table parse_csv(const std::string& text, const std::string& source)
{
    const std::vector<Record> records = split_records(text, source);
    if (records.empty()) throw InvalidInput(source + ": no header row");
    Table table;
    table.header = records[0].fields;
    for (std::string& h : table.header) h = trim(h);
    std::map<std::string, int> seen;
    for (const std::string& h : table.header) {
        if (h.empty()) throw InvalidInput(source + ": empty column name in header");
        if (seen[h]++ > 0) throw InvalidInput(source + ": duplicate column '" + h + "'");
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
        const Record& rec = records[r];
        if (rec.fields.size() != table.header.size()) {
            throw InvalidInput(source + ": line " + std::to_string(rec.line) + " has " +
                               std::to_string(rec.fields.size()) + " fields, expected " +
                               std::to_string(table.header.size()));
        }
        std::vector<double> row(rec.fields.size());
        for (std::size_t c = 0; c < rec.fields.size(); ++c) {
            const std::string cell = trim(rec.fields[c]);
            double v = 0.0;
            const char* first = cell.data();
            const char* last = first + cell.size();
            if (!cell.empty() && *first == '+') ++first;
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
                throw InvalidInput(source + ": line " + std::to_string(rec.line) + ", column '" +
                                   table.header[c] + "': '" + rec.fields[c] +
                                   "' is not a finite number");
            }
            row[c] = v;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

Table read_csv(const std::string& path)
{
    return parse_csv(slurp(path), path);
}

Dataset load_dataset(const std::string& path, const std::string& response)
{
    if (response.empty()) throw InvalidInput("--response is required");
    const Table t = read_csv(path);
    const auto it = std::find(t.header.begin(), t.header.end(), response);
    if (it == t.header.end()) throw InvalidInput(path + ": no column named '" + response + "'");
    const auto ycol = static_cast<std::size_t>(it - t.header.begin());
    if (t.rows.empty()) throw InvalidInput(path + ": no data rows");
    if (t.header.size() < 2) throw InvalidInput(path + ": no design columns besides the response");

    Dataset ds;
    for (std::size_t c = 0; c < t.header.size(); ++c)
        if (c != ycol) ds.columns.push_back(t.header[c]);
    const auto n = static_cast<Index>(t.rows.size());
    const auto p = static_cast<Index>(ds.columns.size());
    ds.X.resize(n, p);
    ds.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        const auto& row = t.rows[static_cast<std::size_t>(i)];
        Index j = 0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c == ycol) {
                ds.y[i] = row[c];
            } else {
                ds.X(i, j++) = row[c];
            }
        }
    }
    return ds;
}

GroupPartition parse_groups(const std::string& text, const std::vector<std::string>& columns,
                            const std::string& source)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(source + ": malformed JSON (" + e.what() + ")");
    }
    if (!doc.is_object() || !doc.contains("groups") || !doc["groups"].is_array()) {
        throw InvalidInput(source + ": expected an object with a \"groups\" array");
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < columns.size(); ++j) index[columns[j]] = j;

    std::vector<int> label(columns.size(), -1);
    int next = 0;
    for (std::size_t g = 0; g < doc["groups"].size(); ++g) {
        const auto& grp = doc["groups"][g];
        if (!grp.is_array() || grp.empty()) {
            throw InvalidInput(source + ": group " + std::to_string(g) + " must be a nonempty array of column names");
        }
        for (const auto& name : grp) {
            if (!name.is_string()) {
                throw InvalidInput(source + ": group " + std::to_string(g) + " contains a non-string entry");
            }
            const auto found = index.find(name.get<std::string>());
            if (found == index.end()) {
                throw InvalidInput(source + ": group " + std::to_string(g) + " names unknown column '" +
                                   name.get<std::string>() + "'");
            }
            if (label[found->second] != -1) {
                throw InvalidInput(source + ": column '" + found->first + "' appears in more than one group");
            }
            label[found->second] = next;
        }
        ++next;
    }
    for (int& l : label)
        if (l == -1) l = next++;
    return GroupPartition::from_labels(label);
}

GroupPartition read_groups(const std::string& path, const std::vector<std::string>& columns)
{
    return parse_groups(slurp(path), columns, path);
}

} // namespace sglq::cli
