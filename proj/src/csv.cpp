#include "gw/csv.hpp"

#include "gw/error.hpp"

namespace gw::csv {

std::vector<Record> parse(std::string_view bytes, char delimiter) {
    if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);

    std::vector<Record> records;
    Record record;
    std::string field;
    bool field_started = false;  // any char (or a quote) seen for this field
    bool record_has_content = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        if (record_has_content || !record.empty()) {
            end_field();
            records.push_back(std::move(record));
        }
        record.clear();
        field.clear();
        field_started = false;
        record_has_content = false;
    };

    std::size_t i = 0;
    const std::size_t n = bytes.size();
    while (i < n) {
        const char c = bytes[i];
        if (c == '"' && !field_started) {
            const std::size_t quote_start = i;
            field_started = true;
            record_has_content = true;
            ++i;
            bool closed = false;
            while (i < n) {
                if (bytes[i] == '"') {
                    if (i + 1 < n && bytes[i + 1] == '"') {
                        field.push_back('"');
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                field.push_back(bytes[i++]);
            }
            if (!closed) {
                throw Error(Errc::MalformedCsv, "unterminated quoted field", quote_start);
            }
            continue;
        }
        if (c == delimiter) {
            record_has_content = true;
            end_field();
            ++i;
            continue;
        }
        if (c == '\n' || c == '\r') {
            end_record();
            if (c == '\r' && i + 1 < n && bytes[i + 1] == '\n') ++i;
            ++i;
            continue;
        }
        field.push_back(c);
        field_started = true;
        record_has_content = true;
        ++i;
    }
    end_record();
    return records;
}

std::string quote_field(std::string_view field, char delimiter) {
    const bool needs = field.empty() || field.find(delimiter) != std::string_view::npos ||
                       field.find_first_of("\"\r\n") != std::string_view::npos;
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace gw::csv
