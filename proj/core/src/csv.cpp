#include "flakysieve/csv.hpp"

#include "flakysieve/error.hpp"

namespace flakysieve::csv {

std::vector<Record> parse(std::string_view text) {
  std::vector<Record> records;
  Record current;
  std::string field;
  std::size_t line = 1;
  current.line = 1;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool record_has_content = false;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(current));
    current = Record{};
    record_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw LoadError("line " + std::to_string(line) + ": unexpected quote inside field");
        }
        in_quotes = true;
        field_was_quoted = true;
        record_has_content = true;
        break;
      case ',':
        end_field();
        record_has_content = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        field.push_back(c);
        break;
      case '\n':
        if (record_has_content || !field.empty() || !current.fields.empty()) {
          end_record();
        }
        ++line;
        current.line = line;
        break;
      default:
        if (field_was_quoted) {
          throw LoadError("line " + std::to_string(line) + ": text after closing quote");
        }
        field.push_back(c);
        record_has_content = true;
        break;
    }
  }
  if (in_quotes) {
    throw LoadError("line " + std::to_string(current.line) + ": unterminated quoted field");
  }
  if (record_has_content || !field.empty() || !current.fields.empty()) end_record();
  return records;
}

void append_field(std::string& out, std::string_view field, bool force_quote) {
  bool quote = force_quote;
  if (!quote) {
    for (char c : field) {
      if (c == ',' || c == '"' || c == '\n' || c == '\r') {
        quote = true;
        break;
      }
    }
  }
  if (!quote) {
    out.append(field);
    return;
  }
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace flakysieve::csv
