#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "recinv/corpus.hpp"
#include "recinv/error.hpp"
#include "recinv/util/io.hpp"
#include "recinv/util/text.hpp"

namespace recinv::corpus {
namespace {

// RFC 4180 style: fields may be quoted, "" escapes a quote inside a quoted field.
std::vector<std::vector<std::string>> split_rows(std::string_view text, char delim) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      any = true;
    } else if (c == delim) {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<double> parse_double(std::string_view s) {
  std::string t = util::trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::string t = util::trim(s);
  if (t.empty()) return std::nullopt;
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::Male ? "male" : "female"; }

std::optional<Gender> parse_gender(std::string_view text) {
  std::string t = util::to_lower_ascii(util::trim(text));
  if (t == "male" || t == "m") return Gender::Male;
  if (t == "female" || t == "f") return Gender::Female;
  return std::nullopt;
}

std::string canonical_title(std::string_view raw) {
  std::string t = util::normalize(raw);
  for (char& c : t) {
    if (c == '"') c = '\'';
  }
  return t;
}

ColumnMapping ColumnMapping::from_json(const Json& j) {
  ColumnMapping m;
  auto opt = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
  };
  if (auto v = opt("user_id")) m.user_id = *v;
  if (auto v = opt("item_id")) m.item_id = *v;
  if (auto v = opt("item_title")) m.item_title = *v;
  if (auto v = opt("rating")) m.rating = *v;
  if (j.contains("timestamp")) m.timestamp = opt("timestamp");
  m.age = opt("age");
  m.gender = opt("gender");
  if (auto v = opt("delimiter")) {
    if (*v == "\\t" || *v == "tab") m.delimiter = '\t';
    else if (v->size() == 1) m.delimiter = (*v)[0];
    else throw Error("column mapping: delimiter must be a single character");
  }
  return m;
}

Json ColumnMapping::to_json() const {
  Json j;
  j["user_id"] = user_id;
  j["item_id"] = item_id;
  j["item_title"] = item_title;
  j["rating"] = rating;
  j["timestamp"] = timestamp ? Json(*timestamp) : Json(nullptr);
  j["age"] = age ? Json(*age) : Json(nullptr);
  j["gender"] = gender ? Json(*gender) : Json(nullptr);
  j["delimiter"] = delimiter == 0 ? Json(nullptr) : Json(std::string(1, delimiter));
  return j;
}

LoadResult parse_ratings(std::string_view text, const ColumnMapping& schema, char delimiter,
                         std::string_view origin) {
  auto rows = split_rows(text, delimiter);
  if (rows.empty()) throw Error(std::string(origin) + ": empty rating dump (no header)");

  std::unordered_map<std::string, std::size_t> header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header.emplace(util::trim(rows[0][i]), i);

  auto required = [&](const std::string& name) {
    auto it = header.find(name);
    if (it == header.end()) {
      throw Error(std::string(origin) + ": missing mapped column '" + name + "'");
    }
    return it->second;
  };
  auto optional_col = [&](const std::optional<std::string>& name) -> std::optional<std::size_t> {
    if (!name) return std::nullopt;
    auto it = header.find(*name);
    if (it == header.end()) return std::nullopt;
    return it->second;
  };

  const std::size_t c_user = required(schema.user_id);
  const std::size_t c_item = required(schema.item_id);
  const std::size_t c_title = required(schema.item_title);
  const std::size_t c_rating = required(schema.rating);
  const auto c_ts = optional_col(schema.timestamp);
  const auto c_age = optional_col(schema.age);
  const auto c_gender = optional_col(schema.gender);

  LoadResult out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    ++out.rows;
    auto cell = [&](std::size_t c) -> std::string_view {
      return c < row.size() ? std::string_view(row[c]) : std::string_view();
    };
    RatingRecord rec;
    rec.user_id = util::trim(cell(c_user));
    rec.item_id = util::trim(cell(c_item));
    rec.item_title = canonical_title(cell(c_title));
    auto rating = parse_double(cell(c_rating));
    if (rec.item_title.empty() || !rating || rec.user_id.empty()) {
      ++out.dropped;
      continue;
    }
    rec.rating = *rating;
    if (c_ts) rec.timestamp = parse_int(cell(*c_ts));
    if (c_age) {
      auto age = parse_int(cell(*c_age));
      if (age && *age >= 0 && *age < 200) rec.age = static_cast<int>(*age);
    }
    if (c_gender) rec.gender = parse_gender(cell(*c_gender));
    out.records.push_back(std::move(rec));
  }
  return out;
}

LoadResult load_ratings(const std::filesystem::path& path, const ColumnMapping& schema) {
  char delim = schema.delimiter;
  if (delim == 0) delim = path.extension() == ".tsv" ? '\t' : ',';
  return parse_ratings(util::read_file(path), schema, delim, path.string());
}

}  // namespace recinv::corpus
