#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>

#include "evalplan/ingest.hpp"
#include "fixtures.hpp"

using namespace evalplan;
using Kind = ParseError::Kind;

namespace {

std::vector<ScoredSample> scores(const std::string& text, ScoreParseOptions opts = {}) {
    std::istringstream in(text);
    return parse_scores(in, opts);
}

std::vector<ManifestEntry> manifest(const std::string& text) {
    std::istringstream in(text);
    return parse_manifest(in);
}

std::vector<CategoryStats> stats(const std::string& text) {
    std::istringstream in(text);
    return parse_category_stats(in);
}

WeightProfile profile(const std::string& text, bool normalize = false) {
    std::istringstream in(text);
    return parse_profile(in, {normalize});
}

template <typename F>
ParseError capture(F&& f) {
    try {
        f();
    } catch (const ParseError& e) {
        return e;
    }
    ADD_FAILURE() << "no ParseError";
    return ParseError(Kind::io, -1, {}, "none");
}

template <typename T, typename W>
std::string dump(const T& v, W write) {
    std::ostringstream out;
    write(out, v);
    return out.str();
}

}  // namespace

TEST(Scores, Basic) {
    const auto s = scores("sample_id,label,score\na,1,0.9\nb,0,0.1\n");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].sample_id, "a");
    EXPECT_EQ(s[0].label, Label::malware);
    EXPECT_EQ(s[0].score, 0.9);
    EXPECT_EQ(s[1].label, Label::benign);
    EXPECT_FALSE(s[1].category);
}

TEST(Scores, OptionalColumns) {
    const auto s = scores("sample_id,label,score,category,first_seen\r\na,1,0.9,dropper,2016-04-11\r\nb,0,0.1,,\r\n");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(*s[0].category, "dropper");
    EXPECT_EQ(s[0].first_seen->to_string(), "2016-04-11");
    EXPECT_FALSE(s[1].category);
    EXPECT_FALSE(s[1].first_seen);
    EXPECT_EQ(scores("sample_id,label,score,first_seen\na,1,1,2016-01-02\n")[0].first_seen, Date(2016, 1, 2));
}

TEST(Scores, QuotingBomAndBlankLines) {
    const auto s = scores("\xEF\xBB\xBFsample_id,label,score,category\n\n\"a,1\",1,2,\"x \"\"y\"\"\"\n\"multi\nline\",0,3,\n\n");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].sample_id, "a,1");
    EXPECT_EQ(*s[0].category, "x \"y\"");
    EXPECT_EQ(s[1].sample_id, "multi\nline");
}

TEST(Scores, Negate) {
    const auto s = scores("sample_id,label,score\na,1,0.25\n", {true});
    EXPECT_EQ(s[0].score, -0.25);
}

TEST(Scores, DistinctErrorsWithLineNumbers) {
    auto e = capture([] { scores(""); });
    EXPECT_EQ(e.kind(), Kind::missing_header);
    e = capture([] { scores("a,1,0.9\n"); });
    EXPECT_EQ(e.kind(), Kind::missing_header);
    e = capture([] { scores("sample_id,label,value\n"); });
    EXPECT_EQ(e.kind(), Kind::bad_header);

    e = capture([] { scores("sample_id,label,score\na,1,0.9\nb,2,0.1\n"); });
    EXPECT_EQ(e.kind(), Kind::bad_label);
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.field(), "label");
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);

    e = capture([] { scores("sample_id,label,score\na,1,inf\n"); });
    EXPECT_EQ(e.kind(), Kind::nonfinite_score);
    e = capture([] { scores("sample_id,label,score\na,1,nan\n"); });
    EXPECT_EQ(e.kind(), Kind::nonfinite_score);
    e = capture([] { scores("sample_id,label,score\na,1,0.9x\n"); });
    EXPECT_EQ(e.kind(), Kind::bad_number);
    e = capture([] { scores("sample_id,label,score,first_seen\na,1,0.9,2016-02-30\n"); });
    EXPECT_EQ(e.kind(), Kind::bad_date);
    EXPECT_EQ(e.field(), "first_seen");
    e = capture([] { scores("sample_id,label,score\na,1,0.9\n\na,0,0.1\n"); });
    EXPECT_EQ(e.kind(), Kind::duplicate_id);
    EXPECT_EQ(e.line(), 4);
    e = capture([] { scores("sample_id,label,score\na,1\n"); });
    EXPECT_EQ(e.kind(), Kind::field_count);
    e = capture([] { scores("sample_id,label,score\n,1,0\n"); });
    EXPECT_EQ(e.kind(), Kind::empty_id);
    e = capture([] { scores("sample_id,label,score\n\"a,1,0\n"); });
    EXPECT_EQ(e.kind(), Kind::unterminated_quote);
    EXPECT_EQ(e.line(), 2);
}

TEST(Scores, RoundTrip) {
    const std::string canonical =
        "sample_id,label,score,category,first_seen\n"
        "\"id,with,commas\",1,0.9,trojan,2016-04-11\n"
        "b,0,-1e-300,,\n"
        "c,0,12345.678,\"say \"\"hi\"\"\",2000-02-29\n";
    EXPECT_EQ(dump(scores(canonical), write_scores), canonical);

    auto syn = synth_scores(SampleSize(200), SampleSize(300), 1.0, 4);
    std::mt19937_64 rng(2);
    for (auto& s : syn) {
        if (rng() % 2) s.category = "c" + std::to_string(rng() % 5);
        if (rng() % 3) s.first_seen = Date(2016, 1, 1).plus_days(static_cast<long long>(rng() % 400));
    }
    const auto text = dump(syn, write_scores);
    const auto back = scores(text);
    ASSERT_EQ(back.size(), syn.size());
    for (std::size_t i = 0; i < syn.size(); ++i) {
        ASSERT_EQ(back[i].sample_id, syn[i].sample_id);
        ASSERT_EQ(back[i].label, syn[i].label);
        ASSERT_EQ(back[i].score, syn[i].score);
        ASSERT_EQ(back[i].category, syn[i].category);
        ASSERT_EQ(back[i].first_seen, syn[i].first_seen);
    }
    EXPECT_EQ(dump(back, write_scores), text);
}

TEST(Scores, RowOrderIndependent) {
    auto syn = synth_scores(SampleSize(50), SampleSize(50), 1.0, 9);
    auto shuffled = syn;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(1));
    auto a = scores(dump(syn, write_scores));
    auto b = scores(dump(shuffled, write_scores));
    auto by_id = [](const ScoredSample& x, const ScoredSample& y) { return x.sample_id < y.sample_id; };
    std::sort(a.begin(), a.end(), by_id);
    std::sort(b.begin(), b.end(), by_id);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a[i].sample_id, b[i].sample_id);
        ASSERT_EQ(a[i].score, b[i].score);
    }
}

TEST(Scores, MillionRowsParseQuickly) {
    std::string text = "sample_id,label,score\n";
    text.reserve(30'000'000);
    for (int i = 0; i < 1'000'000; ++i) {
        text += "s" + std::to_string(i) + "," + std::to_string(i & 1) + "," + format_double(i * 1e-6) + "\n";
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = scores(text);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_EQ(s.size(), 1'000'000u);
    EXPECT_LT(secs, 10.0);
}

TEST(Manifest, ParseAndRoundTrip) {
    const std::string canonical =
        "sample_id,first_seen,label,label_date,category,score\n"
        "a,2016-04-11,1,2016-05-11,dropper,0.75\n"
        "b,2016-01-01,0,,,\n";
    const auto m = manifest(canonical);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m[0].label_date, Date(2016, 5, 11));
    EXPECT_EQ(*m[0].score, 0.75);
    EXPECT_FALSE(m[1].score);
    EXPECT_FALSE(m[1].category);
    EXPECT_EQ(dump(m, write_manifest), canonical);

    const auto big = fixtures::dated_manifest(100, 100, 1.0, 5);
    const auto text = dump(big, write_manifest);
    EXPECT_EQ(dump(manifest(text), write_manifest), text);
}

TEST(Manifest, Errors) {
    const std::string h = "sample_id,first_seen,label,label_date,category,score\n";
    EXPECT_EQ(capture([&] { manifest("sample_id,first_seen\n"); }).kind(), Kind::bad_header);
    EXPECT_EQ(capture([&] { manifest(h + "a,2016-13-01,1,,,\n"); }).kind(), Kind::bad_date);
    EXPECT_EQ(capture([&] { manifest(h + "a,,1,,,\n"); }).kind(), Kind::bad_date);
    EXPECT_EQ(capture([&] { manifest(h + "a,2016-01-02,1,2016-01-01,,\n"); }).kind(), Kind::invalid_value);
    EXPECT_EQ(capture([&] { manifest(h + "a,2016-01-02,x,,,\n"); }).kind(), Kind::bad_label);
    EXPECT_EQ(capture([&] { manifest(h + "a,2016-01-02,1,,,1\na,2016-01-02,1,,,1\n"); }).kind(), Kind::duplicate_id);
}

TEST(CategoryStatsFile, ParseAndRoundTrip) {
    const std::string canonical = "category,class,n,detected\ncommon,benign,10000,1\ncommon,malware,500,450\n";
    const auto s = stats(canonical);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].cls, Label::benign);
    EXPECT_EQ(s[1].detected, 450);
    EXPECT_EQ(dump(s, write_category_stats), canonical);

    const std::string h = "category,class,n,detected\n";
    EXPECT_EQ(capture([&] { stats(h + "a,bogus,1,0\n"); }).kind(), Kind::bad_class);
    EXPECT_EQ(capture([&] { stats(h + "a,benign,1.5,0\n"); }).kind(), Kind::bad_integer);
    EXPECT_EQ(capture([&] { stats(h + "a,benign,5,6\n"); }).kind(), Kind::invalid_value);
    EXPECT_EQ(capture([&] { stats(h + "a,benign,0,0\n"); }).kind(), Kind::invalid_value);
    EXPECT_EQ(capture([&] { stats(h + "a,benign,5,1\na,benign,5,2\n"); }).kind(), Kind::duplicate_id);
}

TEST(ProfileFile, Examples) {
    const auto p = profile(R"({"name": "one-hot", "benign": {"common": 1.0}, "malware": {"commodity": 1.0}})");
    EXPECT_EQ(p.name, "one-hot");
    EXPECT_EQ(p.benign_weights.at("common"), 1.0);

    try {
        (void)profile(R"({"benign": {"a": 0.5, "b": 0.3}, "malware": {"m": 1}})");
        FAIL();
    } catch (const WeightSumError& e) {
        EXPECT_NEAR(e.sum(), 0.8, 1e-15);
    }

    const auto n = profile(R"({"benign": {"a": 1.2, "b": 0.8}, "malware": {"m": 2}})", true);
    EXPECT_EQ(n.benign_weights.at("a"), 0.6);
    EXPECT_EQ(n.benign_weights.at("b"), 0.4);
    EXPECT_EQ(n.malware_weights.at("m"), 1.0);
}

TEST(ProfileFile, Errors) {
    auto e = capture([] { (void)profile(R"({"benign": {"a": 1}, "malware": {"m": 1}, "extra": 1})"); });
    EXPECT_EQ(e.kind(), Kind::unknown_key);
    EXPECT_EQ(e.field(), "extra");
    EXPECT_EQ(capture([] { (void)profile("{not json"); }).kind(), Kind::invalid_document);
    EXPECT_EQ(capture([] { (void)profile(R"({"benign": {"a": 1}})"); }).kind(), Kind::invalid_document);
    EXPECT_EQ(capture([] { (void)profile(R"({"benign": {"a": "x"}, "malware": {"m": 1}})"); }).kind(), Kind::bad_number);
    EXPECT_EQ(capture([] { (void)profile(R"({"benign": {"a": -1}, "malware": {"m": 1}})"); }).kind(),
              Kind::invalid_value);
}

TEST(ProfileFile, RoundTrip) {
    const WeightProfile p{"enterprise", {{"common benign", 0.9}, {"shareware", 0.1}}, {{"m", 1.0}}};
    const auto text = dump(p, write_profile);
    const auto back = profile(text);
    EXPECT_EQ(back.name, p.name);
    EXPECT_EQ(back.benign_weights, p.benign_weights);
    EXPECT_EQ(back.malware_weights, p.malware_weights);
    EXPECT_EQ(dump(back, write_profile), text);
}

TEST(Files, PathOverloads) {
    const auto dir = std::filesystem::temp_directory_path() / "evalplan_ingest_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "mix.json") << R"({"benign": {"a": 1}, "malware": {"m": 1}})";
        std::ofstream(dir / "bad.csv") << "sample_id,label,score\na,7,1\n";
    }
    EXPECT_EQ(parse_profile(dir / "mix.json").name, "mix");
    auto e = capture([&] { (void)parse_scores(dir / "bad.csv"); });
    EXPECT_EQ(e.kind(), Kind::bad_label);
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("bad.csv"), std::string::npos);
    EXPECT_EQ(capture([&] { (void)parse_scores(dir / "missing.csv"); }).kind(), Kind::io);
    std::filesystem::remove_all(dir);
}
