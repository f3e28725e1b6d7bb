#include <catch_amalgamated.hpp>

#include "torsod/verify.hpp"

using namespace torsod;
using namespace torsod::verify;

namespace {

oracle::StackyFan p1(std::int64_t r0 = 1, std::int64_t r1 = 1)
{
    oracle::StackyFan f;
    f.lattice_rank = 1;
    f.rays = {{{1}, r0}, {{-1}, r1}};
    f.max_cones = {{0}, {1}};
    return f;
}

oracle::StackyFan p2()
{
    oracle::StackyFan f;
    f.lattice_rank = 2;
    f.rays = {{{1, 0}, 1}, {{0, 1}, 1}, {{-1, -1}, 1}};
    f.max_cones = {{0, 1}, {1, 2}, {0, 2}};
    return f;
}

void require_all_pass(const OracleReport& rep)
{
    for (const auto& r : rep.failures()) UNSCOPED_INFO(r.check << " " << r.subject << " expected " << r.expected << " observed " << r.observed);
    CHECK(rep.passed());
}

}  // namespace

TEST_CASE("box labels", "[verify]")
{
    auto b = box_labels(2, 1);
    REQUIRE(b.size() == 9);
    CHECK(b.front() == IntVector{-1, -1});
    CHECK(b.back() == IntVector{1, 1});
    CHECK(std::is_sorted(b.begin(), b.end()));
    CHECK(box_labels(3, 0).size() == 1);
    CHECK(box_labels(2, -1).empty());
}

TEST_CASE("oracle self test on standard fans", "[verify][oracle]")
{
    for (const auto& [name, fan] : std::vector<std::pair<std::string, oracle::StackyFan>>{
             {"P1", p1()}, {"P2", p2()}, {"P1(2,1)", p1(2, 1)}}) {
        INFO(name);
        oracle::CohomologyOracle o(fan);
        OracleReport rep = oracle_self_test(o, name, 3);
        require_all_pass(rep);
        std::size_t labels = box_labels(fan.rays.size(), 3).size();
        CHECK(rep.count("oracle.serre_duality") == labels);
        CHECK(rep.count("oracle.h0_count") == labels);
        CHECK(rep.count("oracle.euler") == labels);
        CHECK(rep.count("oracle.structure_sheaf") == 1);
    }
}

TEST_CASE("oracle self test on catalog fans", "[verify][oracle]")
{
    for (const auto& name : catalog_names()) {
        INFO(name);
        ModelPair m = canned_example(name);
        oracle::CohomologyOracle X(m.fan_X), Y(m.fan_Y);
        require_all_pass(oracle_self_test(X, name + ".X", 1));
        require_all_pass(oracle_self_test(Y, name + ".Y", 1));
    }
}

TEST_CASE("report summary and failures", "[verify]")
{
    OracleReport rep;
    rep.add("a", "s1", "1", "1", true);
    rep.add("b", "s2", "1", "2", false);
    rep.add("a", "s3", "0", "0", true);
    CHECK_FALSE(rep.passed());
    CHECK(rep.passed("a"));
    CHECK_FALSE(rep.passed("b"));
    auto s = rep.summary();
    REQUIRE(s.size() == 2);
    CHECK(s[0].check == "a");
    CHECK(s[0].total == 2);
    CHECK(s[1].failed == 1);
    CHECK(rep.failures().size() == 1);
    OracleReport other;
    other.add("c", "", "", "", true);
    rep.append(other);
    CHECK(rep.records.size() == 4);
}

TEST_CASE("verify_sod on a1-half", "[verify][sod]")
{
    ModelPair m = canned_example("a1-half");
    oracle::CohomologyOracle X(m.fan_X), Y(m.fan_Y);
    OracleReport rep = verify_sod(m, X, Y, SodOptions{4, 64});
    require_all_pass(rep);
    for (const char* c : {"sod.fully_faithful", "sod.image_vs_block", "sod.block_vs_block", "sod.exceptional",
                          "sod.face_vanishing", "sod.certificate", "sod.block_count", "sod.face_class_criterion"})
        CHECK(rep.count(c) > 0);
}

TEST_CASE("verify_sod on the other extractions", "[verify][sod]")
{
    for (const char* name : {"a2-third", "a1-half-x-line"}) {
        INFO(name);
        ModelPair m = canned_example(name);
        oracle::CohomologyOracle X(m.fan_X), Y(m.fan_Y);
        OracleReport rep = verify_sod(m, X, Y, SodOptions{3, 64});
        require_all_pass(rep);
        CHECK(rep.count("sod.certificate") > 0);
        CHECK(rep.count("sod.block_count") == (base_is_point(m.datum) ? 1u : 0u));
    }
}

TEST_CASE("verify_sod rejects non-extraction data", "[verify][sod]")
{
    for (const char* name : {"smooth-blowup", "a1-crepant"}) {
        ModelPair m = canned_example(name);
        oracle::CohomologyOracle X(m.fan_X), Y(m.fan_Y);
        CHECK_THROWS_AS(verify_sod(m, X, Y, SodOptions{}), PreconditionError);
    }
}

TEST_CASE("certificate replay uses the oracle Euler characteristics", "[verify][certificate]")
{
    ModelPair m = canned_example("a1-half");
    oracle::CohomologyOracle Y(m.fan_Y);
    CertificateReplay r = certificate_replay(m, Y);
    // Corner alternating sum equals the Koszul block Euler characteristic.
    for (const auto& k : box_labels(m.datum.n(), 2)) {
        Integer alt = 0;
        const std::size_t alpha = m.datum.alpha();
        for (std::uint64_t I = 0; I < (std::uint64_t(1) << alpha); ++I) {
            IntVector c = k;
            int bits = 0;
            for (std::size_t i = 0; i < alpha; ++i)
                if (I >> i & 1) {
                    c[i] -= 1;
                    ++bits;
                }
            alt += (bits % 2 ? -1 : 1) * r.line_bundle(c);
        }
        CHECK(alt == r.block(k));
    }
}
