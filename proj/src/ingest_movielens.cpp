#include <algorithm>
#include <charconv>
#include <set>

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

std::string LoadReport::to_text() const {
    std::string out = fmt::format("format: {}\npath: {}\n", format, path);
    if (delimiter != '\0') out += fmt::format("delimiter: {}\n", delimiter == '\t' ? "tab" : std::string(1, delimiter));
    out += fmt::format("counts: {} users, {} items, {} ratings\n", users, items, ratings);
    for (const auto& w : warnings) out += "warning: " + w + "\n";
    return out;
}

namespace {

RatingRecord parse_rating_line(std::string_view line, const LineError& where) {
    const auto fields = io::split_fields(line, '\t');
    if (fields.size() != 4) where.fail(fmt::format("expected 4 tab-separated fields, got {}", fields.size()));
    const auto user = parse_integer(fields[0]);
    const auto item = parse_integer(fields[1]);
    const auto stars = parse_integer(fields[2]);
    const auto ts = parse_integer(fields[3]);
    if (!user || *user <= 0) where.fail("bad user id");
    if (!item || *item <= 0) where.fail("bad item id");
    if (!stars || *stars < 1 || *stars > 5) where.fail(fmt::format("rating '{}' outside [1,5]", fields[2]));
    if (!ts) where.fail("bad timestamp");
    return RatingRecord{UserId(static_cast<std::uint32_t>(*user)), ItemId(static_cast<std::uint32_t>(*item)),
                        Rating(static_cast<int>(*stars)), std::nullopt, *ts};
}

std::vector<std::string> read_genres(const fs::path& file) {
    const auto text = io::read_file(file);
    std::vector<std::pair<long long, std::string>> entries;
    std::size_t line_no = 0;
    for (auto line : io::split_lines(text)) {
        ++line_no;
        if (io::trim(line).empty()) continue;
        const LineError where{file, line_no};
        const auto fields = io::split_fields(line, '|');
        if (fields.size() != 2) where.fail("expected name|index");
        const auto idx = parse_integer(fields[1]);
        if (!idx || *idx < 0) where.fail("bad genre index");
        entries.emplace_back(*idx, std::string(fields[0]));
    }
    std::sort(entries.begin(), entries.end());
    std::vector<std::string> catalog;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].first != static_cast<long long>(i)) {
            throw ParseError(fmt::format("{}: genre indices are not 0..{}", file.string(), entries.size() - 1));
        }
        catalog.push_back(entries[i].second);
    }
    return catalog;
}

std::vector<Movie> read_items(const fs::path& file, std::size_t genre_count) {
    const auto text = io::read_file(file);
    std::vector<Movie> movies;
    std::size_t line_no = 0;
    for (auto line : io::split_lines(text)) {
        ++line_no;
        if (line.empty()) continue;
        const LineError where{file, line_no};
        const auto fields = io::split_fields(line, '|');
        if (fields.size() != 5 + genre_count) {
            where.fail(fmt::format("expected {} pipe-separated fields, got {}", 5 + genre_count, fields.size()));
        }
        const auto id = parse_integer(fields[0]);
        if (!id || *id <= 0) where.fail("bad item id");
        Movie m;
        m.id = ItemId(static_cast<std::uint32_t>(*id));
        m.title = std::string(fields[1]);
        m.release_date = std::string(fields[2]);
        m.video_release_date = std::string(fields[3]);
        m.url = std::string(fields[4]);
        for (std::size_t g = 0; g < genre_count; ++g) {
            const auto flag = fields[5 + g];
            if (flag == "1") {
                m.genres.push_back(static_cast<std::uint16_t>(g));
            } else if (flag != "0") {
                where.fail(fmt::format("genre flag '{}' is not 0 or 1", flag));
            }
        }
        movies.push_back(std::move(m));
    }
    return movies;
}

std::vector<UserProfile> read_users(const fs::path& file) {
    const auto text = io::read_file(file);
    std::vector<UserProfile> users;
    std::size_t line_no = 0;
    for (auto line : io::split_lines(text)) {
        ++line_no;
        if (line.empty()) continue;
        const LineError where{file, line_no};
        const auto fields = io::split_fields(line, '|');
        if (fields.size() != 5) where.fail(fmt::format("expected 5 pipe-separated fields, got {}", fields.size()));
        const auto id = parse_integer(fields[0]);
        if (!id || *id <= 0) where.fail("bad user id");
        UserProfile u;
        u.id = UserId(static_cast<std::uint32_t>(*id));
        if (const auto age = parse_integer(fields[1])) {
            u.age = static_cast<int>(*age);
        } else if (!fields[1].empty()) {
            where.fail("bad age");
        }
        if (fields[2] == "M") {
            u.sex = Sex::male;
        } else if (fields[2] == "F") {
            u.sex = Sex::female;
        } else if (!fields[2].empty()) {
            where.fail(fmt::format("sex '{}' is not M or F", fields[2]));
        }
        if (!fields[3].empty()) u.occupation = std::string(fields[3]);
        if (!fields[4].empty()) u.zip = std::string(fields[4]);
        users.push_back(std::move(u));
    }
    return users;
}

void check_info(const fs::path& file, const Dataset& d) {
    const auto text = io::read_file(file);
    std::size_t line_no = 0;
    for (auto line : io::split_lines(text)) {
        ++line_no;
        line = io::trim(line);
        if (line.empty()) continue;
        const auto space = line.find(' ');
        if (space == std::string_view::npos) {
            LineError{file, line_no}.fail("expected '<count> <users|items|ratings>'");
        }
        const auto count = parse_integer(line.substr(0, space));
        const auto what = io::trim(line.substr(space + 1));
        if (!count) LineError{file, line_no}.fail("bad count");
        std::size_t actual = 0;
        if (what == "users") {
            actual = d.users().size();
        } else if (what == "items") {
            actual = d.movies().size();
        } else if (what == "ratings") {
            actual = d.ratings().size();
        } else {
            LineError{file, line_no}.fail(fmt::format("unknown count kind '{}'", what));
        }
        if (static_cast<std::size_t>(*count) != actual) {
            throw IntegrityError(fmt::format("{}: declares {} {} but {} were parsed", file.string(), *count, what, actual));
        }
    }
}

std::string flag_string(const Movie& m, std::size_t genre_count) {
    std::string out;
    for (std::size_t g = 0; g < genre_count; ++g) {
        const bool on = std::find(m.genres.begin(), m.genres.end(), g) != m.genres.end();
        out += on ? "|1" : "|0";
    }
    return out;
}

}  // namespace

std::vector<RatingRecord> read_movielens_ratings(const fs::path& file) {
    const auto text = io::read_file(file);
    std::vector<RatingRecord> ratings;
    ratings.reserve(text.size() / 20);
    std::size_t line_no = 0;
    for (auto line : io::split_lines(text)) {
        ++line_no;
        if (line.empty()) continue;
        ratings.push_back(parse_rating_line(line, LineError{file, line_no}));
    }
    return ratings;
}

Dataset load_movielens(const fs::path& dir, LoadReport* report) {
    auto catalog = read_genres(dir / "u.genre");
    auto movies = read_items(dir / "u.item", catalog.size());
    auto users = read_users(dir / "u.user");
    auto ratings = read_movielens_ratings(dir / "u.data");
    Dataset d = make_dataset(std::move(users), std::move(movies), std::move(ratings), std::move(catalog),
                             SourceTag::movielens);
    if (fs::exists(dir / "u.info")) check_info(dir / "u.info", d);
    if (report) {
        report->format = "movielens";
        report->path = dir.string();
        report->delimiter = '\t';
        report->users = d.users().size();
        report->items = d.movies().size();
        report->ratings = d.ratings().size();
    }
    return d;
}

void write_movielens_ratings(std::span<const RatingRecord> ratings, const fs::path& file) {
    std::vector<const RatingRecord*> sorted;
    sorted.reserve(ratings.size());
    for (const auto& r : ratings) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](const RatingRecord* a, const RatingRecord* b) {
        return std::tie(a->user, a->item) < std::tie(b->user, b->item);
    });
    std::string out;
    out.reserve(ratings.size() * 24);
    for (const RatingRecord* r : sorted) {
        out += fmt::format("{}\t{}\t{}\t{}\n", r->user.value(), r->item.value(), r->rating.value(),
                           r->timestamp.value_or(0));
    }
    io::write_file_atomically(file, out);
}

void write_movielens(const Dataset& d, const fs::path& dir) {
    fs::create_directories(dir);
    const auto& catalog = d.genre_catalog();

    std::string data;
    for (const auto& r : d.ratings()) {
        data += fmt::format("{}\t{}\t{}\t{}\n", r.user.value(), r.item.value(), r.rating.value(), r.timestamp.value_or(0));
    }
    io::write_file_atomically(dir / "u.data", data);

    std::string items;
    for (const auto& m : d.movies()) {
        items += fmt::format("{}|{}|{}|{}|{}{}\n", m.id.value(), m.title, m.release_date, m.video_release_date, m.url,
                             flag_string(m, catalog.size()));
    }
    io::write_file_atomically(dir / "u.item", items);

    std::string users;
    std::set<std::string> occupations;
    for (const auto& u : d.users()) {
        const char* sex = !u.sex ? "" : (*u.sex == Sex::male ? "M" : "F");
        users += fmt::format("{}|{}|{}|{}|{}\n", u.id.value(), u.age ? std::to_string(*u.age) : std::string(), sex,
                             u.occupation.value_or(""), u.zip.value_or(""));
        if (u.occupation) occupations.insert(*u.occupation);
    }
    io::write_file_atomically(dir / "u.user", users);

    std::string genres;
    for (std::size_t g = 0; g < catalog.size(); ++g) genres += fmt::format("{}|{}\n", catalog[g], g);
    genres += "\n";
    io::write_file_atomically(dir / "u.genre", genres);

    std::string occ;
    for (const auto& o : occupations) occ += o + "\n";
    io::write_file_atomically(dir / "u.occupation", occ);

    io::write_file_atomically(dir / "u.info", fmt::format("{} users\n{} items\n{} ratings\n", d.users().size(),
                                                          d.movies().size(), d.ratings().size()));
}

}  // namespace ctxrec::ingest
