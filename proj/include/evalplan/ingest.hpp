#pragma once

// On-disk formats. All delimited files are comma separated UTF-8 with a
// mandatory header; "\n" and "\r\n" line ends are both accepted, blank lines
// are skipped, and fields may be double-quoted with "" as the escape.
//
//   scores     sample_id,label,score[,category][,first_seen]
//   manifest   sample_id,first_seen,label,label_date,category,score
//   stats      category,class,n,detected
//   profile    JSON {"name": s, "benign": {cat: w}, "malware": {cat: w}}

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evalplan/category.hpp"
#include "evalplan/date.hpp"
#include "evalplan/error.hpp"
#include "evalplan/format.hpp"
#include "evalplan/roc.hpp"
#include "evalplan/timedelay.hpp"

namespace evalplan {

class ParseError : public DomainError {
public:
    enum class Kind {
        io,
        missing_header,
        bad_header,
        field_count,
        unterminated_quote,
        empty_id,
        duplicate_id,
        bad_label,
        bad_class,
        bad_number,
        nonfinite_score,
        bad_integer,
        bad_date,
        invalid_value,
        invalid_document,
        unknown_key,
    };

    ParseError(Kind kind, std::int64_t line, std::string field, const std::string& message)
        : DomainError(describe(line, field, message)),
          kind_(kind),
          line_(line),
          field_(std::move(field)),
          message_(message) {}

    Kind kind() const noexcept { return kind_; }
    std::int64_t line() const noexcept { return line_; }  // 1-based, 0 when not line oriented
    const std::string& field() const noexcept { return field_; }
    const std::string& message() const noexcept { return message_; }

private:
    static std::string describe(std::int64_t line, const std::string& field, const std::string& message) {
        std::string out;
        if (line > 0) out += "line " + std::to_string(line) + ": ";
        if (!field.empty()) out += "field '" + field + "': ";
        return out + message;
    }

    Kind kind_;
    std::int64_t line_;
    std::string field_;
    std::string message_;
};

namespace csv {

struct Record {
    std::int64_t line = 0;  // where the record starts
    std::vector<std::string> fields;
};

// Streams one record at a time. A quoted field may span lines.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    bool next(Record& rec) {
        std::string line;
        while (read_line(line)) {
            if (line.empty()) continue;
            rec.line = line_no_;
            rec.fields.clear();
            split(line, rec);
            return true;
        }
        return false;
    }

private:
    bool read_line(std::string& line) {
        if (!std::getline(in_, line)) return false;
        ++line_no_;
        if (line_no_ == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    }

    void split(std::string& line, Record& rec) {
        std::string field;
        bool quoted = false;
        bool was_quoted = false;
        std::size_t i = 0;
        for (;;) {
            if (i == line.size()) {
                if (!quoted) break;
                std::string more;
                if (!read_line(more)) {
                    throw ParseError(ParseError::Kind::unterminated_quote, rec.line, {}, "unterminated quoted field");
                }
                field += '\n';
                line = std::move(more);
                i = 0;
                continue;
            }
            const char c = line[i++];
            if (quoted) {
                if (c != '"') {
                    field += c;
                } else if (i < line.size() && line[i] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else if (c == ',') {
                rec.fields.push_back(std::move(field));
                field.clear();
                was_quoted = false;
            } else if (c == '"' && field.empty() && !was_quoted) {
                quoted = was_quoted = true;
            } else {
                field += c;
            }
        }
        rec.fields.push_back(std::move(field));
    }

    std::istream& in_;
    std::int64_t line_no_ = 0;
};

inline std::string quote(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += v[i];
    }
    return out;
}

}  // namespace csv

namespace detail {

using Kind = ParseError::Kind;

inline Label parse_label(const std::string& s, std::int64_t line, const char* field) {
    if (s == "0") return Label::benign;
    if (s == "1") return Label::malware;
    throw ParseError(Kind::bad_label, line, field, "label must be 0 or 1, got '" + s + "'");
}

inline double parse_real(const std::string& s, std::int64_t line, const char* field) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ParseError(Kind::bad_number, line, field, "not a number: '" + s + "'");
    }
    if (!std::isfinite(v)) throw ParseError(Kind::nonfinite_score, line, field, "value must be finite, got '" + s + "'");
    return v;
}

inline std::int64_t parse_int(const std::string& s, std::int64_t line, const char* field) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ParseError(Kind::bad_integer, line, field, "not an integer: '" + s + "'");
    }
    return v;
}

inline Date parse_date(const std::string& s, std::int64_t line, const char* field) {
    const auto d = Date::parse(s);
    if (!d) throw ParseError(Kind::bad_date, line, field, "expected a YYYY-MM-DD date, got '" + s + "'");
    return *d;
}

inline std::optional<std::string> optional_text(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return s;
}

inline csv::Record read_header(csv::Reader& reader) {
    csv::Record header;
    if (!reader.next(header)) throw ParseError(Kind::missing_header, 1, {}, "missing header (empty input)");
    return header;
}

inline void expect_fields(const csv::Record& rec, std::size_t n) {
    if (rec.fields.size() != n) {
        throw ParseError(Kind::field_count, rec.line, {},
                         "expected " + std::to_string(n) + " fields, got " + std::to_string(rec.fields.size()));
    }
}

inline void check_id(const std::string& id, std::int64_t line, std::unordered_set<std::string>& seen) {
    if (id.empty()) throw ParseError(Kind::empty_id, line, "sample_id", "sample_id is empty");
    if (!seen.insert(id).second) throw ParseError(Kind::duplicate_id, line, "sample_id", "duplicate sample_id '" + id + "'");
}

inline std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(Kind::io, 0, {}, "cannot open '" + path.string() + "'");
    return in;
}

template <typename F>
auto with_file(const std::filesystem::path& path, F&& parse) {
    auto in = open(path);
    try {
        return parse(in);
    } catch (const ParseError& e) {
        throw ParseError(e.kind(), e.line(), e.field(), path.string() + ": " + e.message());
    }
}

}  // namespace detail

// ---------------------------------------------------------------- scores

struct ScoreParseOptions {
    bool negate = false;  // for detectors where lower means more malicious
};

inline std::vector<ScoredSample> parse_scores(std::istream& in, const ScoreParseOptions& opts = {}) {
    using detail::Kind;
    csv::Reader reader(in);
    const auto header = detail::read_header(reader);
    const std::string h = csv::join(header.fields);
    bool has_category = false, has_first_seen = false;
    if (h == "sample_id,label,score") {
    } else if (h == "sample_id,label,score,category") {
        has_category = true;
    } else if (h == "sample_id,label,score,first_seen") {
        has_first_seen = true;
    } else if (h == "sample_id,label,score,category,first_seen") {
        has_category = has_first_seen = true;
    } else if (header.fields.empty() || header.fields[0] != "sample_id") {
        throw ParseError(Kind::missing_header, header.line, {},
                         "missing header; expected sample_id,label,score[,category][,first_seen], got '" + h + "'");
    } else {
        throw ParseError(Kind::bad_header, header.line, {},
                         "header must be sample_id,label,score[,category][,first_seen], got '" + h + "'");
    }
    const std::size_t width = 3 + has_category + has_first_seen;

    std::vector<ScoredSample> out;
    std::unordered_set<std::string> seen;
    csv::Record rec;
    while (reader.next(rec)) {
        detail::expect_fields(rec, width);
        ScoredSample s;
        s.sample_id = rec.fields[0];
        detail::check_id(s.sample_id, rec.line, seen);
        s.label = detail::parse_label(rec.fields[1], rec.line, "label");
        s.score = detail::parse_real(rec.fields[2], rec.line, "score");
        if (opts.negate) s.score = -s.score;
        std::size_t col = 3;
        if (has_category) s.category = detail::optional_text(rec.fields[col++]);
        if (has_first_seen && !rec.fields[col].empty()) {
            s.first_seen = detail::parse_date(rec.fields[col], rec.line, "first_seen");
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<ScoredSample> parse_scores(const std::filesystem::path& path, const ScoreParseOptions& opts = {}) {
    return detail::with_file(path, [&](std::istream& in) { return parse_scores(in, opts); });
}

// Optional columns are written when any row carries them.
inline void write_scores(std::ostream& out, const std::vector<ScoredSample>& samples) {
    bool cat = false, seen = false;
    for (const auto& s : samples) {
        cat |= s.category.has_value();
        seen |= s.first_seen.has_value();
    }
    out << "sample_id,label,score" << (cat ? ",category" : "") << (seen ? ",first_seen" : "") << '\n';
    for (const auto& s : samples) {
        out << csv::quote(s.sample_id) << ',' << static_cast<int>(s.label) << ',' << format_double(s.score);
        if (cat) out << ',' << csv::quote(s.category.value_or(""));
        if (seen) out << ',' << (s.first_seen ? s.first_seen->to_string() : "");
        out << '\n';
    }
}

// ---------------------------------------------------------------- manifest

inline constexpr std::string_view kManifestHeader = "sample_id,first_seen,label,label_date,category,score";

inline std::vector<ManifestEntry> parse_manifest(std::istream& in) {
    using detail::Kind;
    csv::Reader reader(in);
    const auto header = detail::read_header(reader);
    if (csv::join(header.fields) != kManifestHeader) {
        const auto kind = header.fields.empty() || header.fields[0] != "sample_id" ? Kind::missing_header
                                                                                    : Kind::bad_header;
        throw ParseError(kind, header.line, {},
                         "header must be " + std::string(kManifestHeader) + ", got '" + csv::join(header.fields) + "'");
    }
    std::vector<ManifestEntry> out;
    std::unordered_set<std::string> seen;
    csv::Record rec;
    while (reader.next(rec)) {
        detail::expect_fields(rec, 6);
        ManifestEntry e;
        e.sample_id = rec.fields[0];
        detail::check_id(e.sample_id, rec.line, seen);
        e.first_seen = detail::parse_date(rec.fields[1], rec.line, "first_seen");
        e.label = detail::parse_label(rec.fields[2], rec.line, "label");
        if (!rec.fields[3].empty()) {
            e.label_date = detail::parse_date(rec.fields[3], rec.line, "label_date");
            if (*e.label_date < e.first_seen) {
                throw ParseError(Kind::invalid_value, rec.line, "label_date", "label_date precedes first_seen");
            }
        }
        e.category = detail::optional_text(rec.fields[4]);
        if (!rec.fields[5].empty()) e.score = detail::parse_real(rec.fields[5], rec.line, "score");
        out.push_back(std::move(e));
    }
    return out;
}

inline std::vector<ManifestEntry> parse_manifest(const std::filesystem::path& path) {
    return detail::with_file(path, [](std::istream& in) { return parse_manifest(in); });
}

inline void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& entries) {
    out << kManifestHeader << '\n';
    for (const auto& e : entries) {
        out << csv::quote(e.sample_id) << ',' << e.first_seen.to_string() << ',' << static_cast<int>(e.label) << ','
            << (e.label_date ? e.label_date->to_string() : "") << ',' << csv::quote(e.category.value_or("")) << ','
            << (e.score ? format_double(*e.score) : "") << '\n';
    }
}

// ---------------------------------------------------------------- category stats

inline constexpr std::string_view kStatsHeader = "category,class,n,detected";

inline std::vector<CategoryStats> parse_category_stats(std::istream& in) {
    using detail::Kind;
    csv::Reader reader(in);
    const auto header = detail::read_header(reader);
    if (csv::join(header.fields) != kStatsHeader) {
        const auto kind = header.fields.empty() || header.fields[0] != "category" ? Kind::missing_header
                                                                                   : Kind::bad_header;
        throw ParseError(kind, header.line, {},
                         "header must be " + std::string(kStatsHeader) + ", got '" + csv::join(header.fields) + "'");
    }
    std::vector<CategoryStats> out;
    std::set<std::pair<std::string, std::string>> seen;
    csv::Record rec;
    while (reader.next(rec)) {
        detail::expect_fields(rec, 4);
        CategoryStats s;
        s.category = rec.fields[0];
        if (s.category.empty()) throw ParseError(Kind::empty_id, rec.line, "category", "category is empty");
        const auto& cls = rec.fields[1];
        if (cls == "benign") {
            s.cls = Label::benign;
        } else if (cls == "malware") {
            s.cls = Label::malware;
        } else {
            throw ParseError(Kind::bad_class, rec.line, "class", "class must be benign or malware, got '" + cls + "'");
        }
        if (!seen.emplace(cls, s.category).second) {
            throw ParseError(Kind::duplicate_id, rec.line, "category", "duplicate " + cls + " category '" + s.category + "'");
        }
        s.n = detail::parse_int(rec.fields[2], rec.line, "n");
        if (s.n < 1) throw ParseError(Kind::invalid_value, rec.line, "n", "n must be >= 1");
        s.detected = detail::parse_int(rec.fields[3], rec.line, "detected");
        if (s.detected < 0 || s.detected > s.n) {
            throw ParseError(Kind::invalid_value, rec.line, "detected", "detected must lie in [0, n]");
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<CategoryStats> parse_category_stats(const std::filesystem::path& path) {
    return detail::with_file(path, [](std::istream& in) { return parse_category_stats(in); });
}

inline void write_category_stats(std::ostream& out, const std::vector<CategoryStats>& stats) {
    out << kStatsHeader << '\n';
    for (const auto& s : stats) {
        out << csv::quote(s.category) << ',' << class_name(s.cls) << ',' << s.n << ',' << s.detected << '\n';
    }
}

// ---------------------------------------------------------------- profile

struct ProfileParseOptions {
    bool normalize = false;
};

inline WeightProfile parse_profile(std::istream& in, const ProfileParseOptions& opts = {}) {
    using detail::Kind;
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(Kind::invalid_document, 0, {}, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError(Kind::invalid_document, 0, {}, "profile must be a JSON object");

    WeightProfile p;
    bool have_benign = false, have_malware = false;
    auto read_map = [](const json& j, const std::string& key) {
        if (!j.is_object()) throw ParseError(Kind::invalid_document, 0, key, "must be an object of weights");
        std::map<std::string, double> w;
        for (const auto& [cat, v] : j.items()) {
            if (!v.is_number()) throw ParseError(Kind::bad_number, 0, key + "." + cat, "weight must be a number");
            const double x = v.get<double>();
            if (!(x >= 0.0) || !std::isfinite(x)) {
                throw ParseError(Kind::invalid_value, 0, key + "." + cat, "weight must be finite and >= 0");
            }
            w[cat] = x;
        }
        return w;
    };
    for (const auto& [key, value] : doc.items()) {
        if (key == "name") {
            if (!value.is_string()) throw ParseError(Kind::invalid_document, 0, key, "name must be a string");
            p.name = value.get<std::string>();
        } else if (key == "benign") {
            p.benign_weights = read_map(value, key);
            have_benign = true;
        } else if (key == "malware") {
            p.malware_weights = read_map(value, key);
            have_malware = true;
        } else {
            throw ParseError(Kind::unknown_key, 0, key, "unknown key '" + key + "' (expected name, benign, malware)");
        }
    }
    if (!have_benign) throw ParseError(Kind::invalid_document, 0, "benign", "missing benign weights");
    if (!have_malware) throw ParseError(Kind::invalid_document, 0, "malware", "missing malware weights");
    if (opts.normalize) p = normalized(std::move(p));
    validate_profile(p);
    return p;
}

// A profile without a name takes the file stem.
inline WeightProfile parse_profile(const std::filesystem::path& path, const ProfileParseOptions& opts = {}) {
    auto p = detail::with_file(path, [&](std::istream& in) { return parse_profile(in, opts); });
    if (p.name.empty()) p.name = path.stem().string();
    return p;
}

inline void write_profile(std::ostream& out, const WeightProfile& p) {
    const nlohmann::ordered_json doc{{"name", p.name}, {"benign", p.benign_weights}, {"malware", p.malware_weights}};
    out << doc.dump(2) << '\n';
}

}  // namespace evalplan
