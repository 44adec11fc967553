#include <algorithm>
#include <array>
#include <cctype>
#include <map>

#include <fmt/format.h>

#include "ctxrec/error.hpp"
#include "ctxrec/ingest.hpp"
#include "ctxrec/io.hpp"
#include "ctxrec/log.hpp"
#include "parse_util.hpp"

namespace ctxrec::ingest {

namespace fs = std::filesystem;
using detail::LineError;
using detail::parse_integer;
using detail::parse_real;

const std::vector<std::string>& comoda_genres() {
    static const std::vector<std::string> genres = {
        "Romance", "Adventure", "Comedy",    "Biography", "Drama",     "Horror", "Documentary", "Mystery",
        "Sci-Fi",  "Action",    "War",       "Sport",     "Musical",   "Film-Noir", "Animation", "History",
        "Thriller", "Music",    "Family",    "Fantasy",   "Crime",     "Western",
    };
    return genres;
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Splits a delimited row; in comma mode double-quoted fields may contain
// delimiters and "" escapes.
std::vector<std::string> split_row(std::string_view line, char delimiter, const LineError& where) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    bool field_start = true;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += c;
            }
        } else if (c == '"' && field_start) {
            quoted = true;
            field_start = false;
        } else if (c == delimiter) {
            fields.push_back(std::move(current));
            current.clear();
            field_start = true;
        } else {
            current += c;
            field_start = false;
        }
    }
    if (quoted) where.fail("unterminated quoted field");
    fields.push_back(std::move(current));
    return fields;
}

std::string quote_if_needed(const std::string& s, char delimiter) {
    if (s.find(delimiter) == std::string::npos && s.find('"') == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

bool is_missing(std::string_view s) {
    s = io::trim(s);
    return s.empty() || s == "-1";
}

std::optional<std::string> text_field(std::string_view s) {
    if (is_missing(s)) return std::nullopt;
    return std::string(io::trim(s));
}

constexpr std::array<std::string_view, 3> kGenreColumns = {"genre1", "genre2", "genre3"};
constexpr std::array<std::string_view, 3> kActorColumns = {"actor1", "actor2", "actor3"};

struct Columns {
    std::map<std::string, std::size_t> index;  // lower-cased header -> column

    std::optional<std::size_t> find(std::string_view name) const {
        const auto it = index.find(lower(name));
        if (it == index.end()) return std::nullopt;
        return it->second;
    }
};

class GenreResolver {
public:
    explicit GenreResolver(std::vector<std::string>* catalog) : catalog_(catalog) {}

    std::uint16_t resolve(std::string_view token, std::vector<std::string>& warnings) {
        token = io::trim(token);
        if (const auto code = parse_integer(token)) {
            if (*code >= 1 && *code <= static_cast<long long>(comoda_genres().size())) {
                return static_cast<std::uint16_t>(*code - 1);
            }
        }
        const auto key = lower(token);
        for (std::size_t g = 0; g < catalog_->size(); ++g) {
            if (lower((*catalog_)[g]) == key) return static_cast<std::uint16_t>(g);
        }
        warnings.push_back(fmt::format("genre '{}' not in the CoMoDa catalog; appended", token));
        catalog_->emplace_back(token);
        return static_cast<std::uint16_t>(catalog_->size() - 1);
    }

private:
    std::vector<std::string>* catalog_;
};

}  // namespace

Dataset load_comoda(const fs::path& file, LoadReport* report) {
    const auto text = io::read_file(file);
    const auto lines = io::split_lines(text);
    if (lines.empty()) throw ParseError(fmt::format("{}: empty file", file.filename().string()));

    const char delimiter = lines[0].find('\t') != std::string_view::npos ? '\t' : ',';
    Columns cols;
    {
        const auto header = split_row(lines[0], delimiter, LineError{file, 1});
        for (std::size_t i = 0; i < header.size(); ++i) cols.index.emplace(lower(io::trim(header[i])), i);
    }
    const auto require = [&](std::string_view name) {
        const auto c = cols.find(name);
        if (!c) throw ParseError(fmt::format("{}:1: missing column '{}'", file.filename().string(), name));
        return *c;
    };
    const std::size_t c_user = require("userID");
    const std::size_t c_item = require("itemID");
    const std::size_t c_rating = require("rating");
    std::array<std::size_t, kContextDimCount> c_context{};
    for (std::size_t k = 0; k < kContextDimCount; ++k) c_context[k] = require(context_dim_name(kAllContextDims[k]));

    std::vector<std::string> warnings;
    std::vector<std::string> catalog = comoda_genres();
    GenreResolver genres(&catalog);

    std::map<std::uint32_t, UserProfile> users;
    std::map<std::uint32_t, Movie> movies;
    std::vector<RatingRecord> ratings;

    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (io::trim(lines[li]).empty()) continue;
        const LineError where{file, li + 1};
        const auto fields = split_row(lines[li], delimiter, where);
        const auto field = [&](std::optional<std::size_t> c) -> std::string_view {
            if (!c || *c >= fields.size()) return {};
            return fields[*c];
        };
        if (fields.size() < cols.index.size()) {
            where.fail(fmt::format("expected {} fields, got {}", cols.index.size(), fields.size()));
        }

        const auto user = parse_integer(field(c_user));
        const auto item = parse_integer(field(c_item));
        if (!user || *user <= 0) where.fail(fmt::format("bad userID '{}'", field(c_user)));
        if (!item || *item <= 0) where.fail(fmt::format("bad itemID '{}'", field(c_item)));
        const auto stars = parse_integer(field(c_rating));
        if (!stars || *stars < 1 || *stars > 5) where.fail(fmt::format("rating '{}' outside [1,5]", field(c_rating)));

        std::array<int, kContextDimCount> codes{};
        for (std::size_t k = 0; k < kContextDimCount; ++k) {
            const auto code = parse_integer(field(c_context[k]));
            if (!code) where.fail(fmt::format("bad {} value '{}'", context_dim_name(kAllContextDims[k]), field(c_context[k])));
            codes[k] = static_cast<int>(*code);
        }
        ContextVector context;
        try {
            context = ContextVector::from_codes(codes);
        } catch (const DomainError& e) {
            where.fail(e.what());
        }

        const auto uid = static_cast<std::uint32_t>(*user);
        const auto iid = static_cast<std::uint32_t>(*item);
        ratings.push_back(RatingRecord{UserId(uid), ItemId(iid), Rating(static_cast<int>(*stars)), context, std::nullopt});

        if (!users.contains(uid)) {
            UserProfile u;
            u.id = UserId(uid);
            if (const auto age = parse_integer(field(cols.find("age"))); age && *age >= 0) u.age = static_cast<int>(*age);
            if (const auto sex = parse_integer(field(cols.find("sex")))) {
                if (*sex == 1) u.sex = Sex::male;
                if (*sex == 2) u.sex = Sex::female;
            }
            u.city = text_field(field(cols.find("city")));
            u.country = text_field(field(cols.find("country")));
            users.emplace(uid, std::move(u));
        }

        if (!movies.contains(iid)) {
            Movie m;
            m.id = ItemId(iid);
            m.title = std::string(io::trim(field(cols.find("title"))));
            m.director = text_field(field(cols.find("director")));
            m.country = text_field(field(cols.find("movieCountry")));
            m.language = text_field(field(cols.find("movieLanguage")));
            if (const auto raw = field(cols.find("movieYear")); !is_missing(raw)) {
                if (const auto year = parse_integer(raw)) {
                    m.year = static_cast<int>(*year);
                } else {
                    warnings.push_back(fmt::format("line {}: unparseable movieYear '{}' dropped", li + 1, raw));
                }
            }
            for (auto name : kGenreColumns) {
                const auto raw = field(cols.find(name));
                if (is_missing(raw)) continue;
                const auto g = genres.resolve(raw, warnings);
                if (std::find(m.genres.begin(), m.genres.end(), g) == m.genres.end()) m.genres.push_back(g);
            }
            for (auto name : kActorColumns) {
                if (auto a = text_field(field(cols.find(name)))) m.actors.push_back(std::move(*a));
            }
            if (const auto raw = field(cols.find("budget")); !is_missing(raw)) {
                if (const auto budget = parse_real(raw)) {
                    m.budget = *budget;
                } else {
                    warnings.push_back(fmt::format("line {}: unparseable budget '{}' dropped", li + 1, raw));
                }
            }
            movies.emplace(iid, std::move(m));
        }
    }

    // Genres outside the standard list are ordered by name so the catalog does
    // not depend on row order.
    const std::size_t base = comoda_genres().size();
    if (catalog.size() > base) {
        std::vector<std::size_t> extra(catalog.size() - base);
        for (std::size_t i = 0; i < extra.size(); ++i) extra[i] = base + i;
        std::sort(extra.begin(), extra.end(), [&](auto a, auto b) { return catalog[a] < catalog[b]; });
        std::vector<std::uint16_t> remap(catalog.size());
        std::vector<std::string> sorted(catalog.begin(), catalog.begin() + static_cast<std::ptrdiff_t>(base));
        for (std::size_t g = 0; g < base; ++g) remap[g] = static_cast<std::uint16_t>(g);
        for (std::size_t i = 0; i < extra.size(); ++i) {
            remap[extra[i]] = static_cast<std::uint16_t>(base + i);
            sorted.push_back(catalog[extra[i]]);
        }
        for (auto& [_, m] : movies) {
            for (auto& g : m.genres) g = remap[g];
        }
        catalog = std::move(sorted);
    }

    std::vector<UserProfile> user_list;
    for (auto& [_, u] : users) user_list.push_back(std::move(u));
    std::vector<Movie> movie_list;
    for (auto& [_, m] : movies) movie_list.push_back(std::move(m));

    Dataset d = make_dataset(std::move(user_list), std::move(movie_list), std::move(ratings), std::move(catalog),
                             SourceTag::comoda);
    for (const auto& w : warnings) logger()->warn("{}: {}", file.filename().string(), w);
    if (report) {
        report->format = "comoda";
        report->path = file.string();
        report->delimiter = delimiter;
        report->users = d.users().size();
        report->items = d.movies().size();
        report->ratings = d.ratings().size();
        report->warnings = std::move(warnings);
    }
    return d;
}

void write_comoda(const Dataset& d, const fs::path& file, char delimiter) {
    std::vector<std::string> header = {"userID", "itemID", "rating", "age", "sex", "city", "country"};
    for (ContextDim dim : kAllContextDims) header.emplace_back(context_dim_name(dim));
    for (const char* c : {"director", "movieCountry", "movieLanguage", "movieYear", "genre1", "genre2", "genre3",
                          "actor1", "actor2", "actor3", "budget", "title"}) {
        header.emplace_back(c);
    }

    const auto opt = [](const std::optional<std::string>& s) { return s.value_or("-1"); };
    const auto join = [&](const std::vector<std::string>& fields) {
        std::string line;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) line += delimiter;
            line += quote_if_needed(fields[i], delimiter);
        }
        return line + "\n";
    };

    std::string out = join(header);
    for (const RatingRecord& r : d.ratings()) {
        const UserProfile& u = d.user(r.user);
        const Movie& m = d.movie(r.item);
        std::vector<std::string> row = {
            std::to_string(r.user.value()),
            std::to_string(r.item.value()),
            std::to_string(r.rating.value()),
            u.age ? std::to_string(*u.age) : "-1",
            !u.sex ? "-1" : (*u.sex == Sex::male ? "1" : "2"),
            opt(u.city),
            opt(u.country),
        };
        const auto codes = r.context.value_or(ContextVector{}).codes();
        for (int c : codes) row.push_back(std::to_string(c));
        row.push_back(opt(m.director));
        row.push_back(opt(m.country));
        row.push_back(opt(m.language));
        row.push_back(m.year ? std::to_string(*m.year) : "-1");
        for (std::size_t g = 0; g < 3; ++g) {
            row.push_back(g < m.genres.size() ? d.genre_catalog()[m.genres[g]] : "-1");
        }
        for (std::size_t a = 0; a < 3; ++a) row.push_back(a < m.actors.size() ? m.actors[a] : "-1");
        row.push_back(m.budget ? fmt::format("{}", *m.budget) : "-1");
        row.push_back(m.title);
        out += join(row);
    }
    io::write_file_atomically(file, out);
}

}  // namespace ctxrec::ingest
