#include <catch_amalgamated.hpp>

#include "torsod/sod.hpp"

using namespace torsod;

namespace {

IntVector iv(std::initializer_list<long long> xs)
{
    IntVector v;
    for (auto x : xs) v.emplace_back(x);
    return v;
}

Rational q(long long p, long long d) { return Rational(p) / d; }

ExtractionDatum a1_half()
{
    return validate({2, 2, {iv({1, 0}), iv({1, 2}), iv({1, 1})}, iv({1, 1, -2}), iv({2, 2, 1})});
}

ExtractionDatum smooth_blowup()
{
    return validate({2, 2, {iv({1, 0}), iv({0, 1}), iv({1, 1})}, iv({1, 1, -1}), iv({1, 1, 1})});
}

ExtractionDatum a1_crepant()
{
    return validate({2, 2, {iv({1, 0}), iv({1, 2}), iv({1, 1})}, iv({1, 1, -2}), iv({1, 1, 1})});
}

const CheckRecord* find_record(const CheckReport& rep, const std::string& check, const std::string& subject)
{
    for (const auto& r : rep.records)
        if (r.check == check && r.subject == subject) return &r;
    return nullptr;
}

}  // namespace

TEST_CASE("in_pushforward_window examples", "[sod][window]")
{
    ExtractionDatum d = a1_half();
    CHECK(in_pushforward_window(d, iv({0, 0, 0})));
    CHECK_FALSE(in_pushforward_window(d, iv({1, 0, 0})));
    CHECK(in_pushforward_window(d, iv({-1, 0, 0})));
    CHECK_FALSE(in_pushforward_window(d, iv({-1, -1, 0})));
}

TEST_CASE("spanning classes of a1-half", "[sod][spanning]")
{
    ExtractionDatum d = a1_half();
    auto sc = spanning_classes(d);
    REQUIRE(sc.size() == 4);
    std::set<Rational> ws;
    bool has_zero = false;
    AbelianGroupDesc G = x_class_group(d);
    CHECK(G.free_rank() == 1);
    CHECK(G.invariant_factors() == iv({2}));
    for (std::size_t i = 0; i < sc.size(); ++i) {
        ws.insert(sc[i].weight);
        CHECK(in_pushforward_window(d, sc[i].representative));
        CHECK(weighted_sum(d, sc[i].representative) == sc[i].weight);
        has_zero = has_zero || G.is_trivial_class(sc[i].representative);
        for (std::size_t j = 0; j < i; ++j) CHECK_FALSE(G.same_class(sc[i].representative, sc[j].representative));
    }
    CHECK(ws == std::set<Rational>{0, q(-1, 2)});
    CHECK(has_zero);
}

TEST_CASE("spanning classes of the smooth blowup", "[sod][spanning]")
{
    auto sc = spanning_classes(smooth_blowup());
    REQUIRE(sc.size() == 2);
    CHECK(sc[0].weight == 0);
    CHECK(sc[1].weight == -1);
    CHECK(is_zero(sc[0].representative));
}

TEST_CASE("phi_pushforward examples", "[sod][pushforward]")
{
    ExtractionDatum d = a1_half();
    Pushforward p = phi_pushforward(d, iv({0, 0, 0}));
    CHECK(p.label == iv({0, 0}));
    CHECK(p.higher_vanishing);
    CHECK(p.sheaf_formula_applies);
    p = phi_pushforward(d, iv({-1, 0, 0}));
    CHECK(p.label == iv({-1, 0}));
    CHECK(p.higher_vanishing);
    CHECK(p.sheaf_formula_applies);
    p = phi_pushforward(d, iv({3, 3, 0}));
    CHECK(p.label == iv({3, 3}));
    CHECK_FALSE(p.sheaf_formula_applies);
}

TEST_CASE("face_vanishes examples", "[sod][vanishing]")
{
    ExtractionDatum d = a1_half();
    CHECK(vanishing_coefficient(d, iv({1, 0})) == q(1, 4));
    CHECK(face_vanishes(d, iv({1, 0})));
    CHECK(vanishing_coefficient(d, iv({0, 0})) == 0);
    CHECK_FALSE(face_vanishes(d, iv({0, 0})));
    CHECK(vanishing_coefficient(d, iv({2, 2})) == 1);
    CHECK_FALSE(face_vanishes(d, iv({2, 2})));
}

TEST_CASE("fully_faithful_check on a1-half", "[sod][ff]")
{
    ExtractionDatum d = a1_half();
    CheckReport rep = fully_faithful_check(d);
    CHECK(rep.passed());
    std::vector<Rational> subset_sums;
    for (const auto& r : rep.records)
        if (r.check == "ff.koszul_subset") {
            subset_sums.push_back(r.value);
            CHECK(*r.lower == 0);
            CHECK(*r.upper == 2);
        }
    CHECK(subset_sums == std::vector<Rational>{q(1, 2), q(1, 2), 1});
    std::size_t pairs = 0;
    for (const auto& r : rep.records)
        if (r.check == "ff.difference") {
            ++pairs;
            CHECK(r.value > -2);
            CHECK(r.value < 1);
        }
    CHECK(pairs == 16);
}

TEST_CASE("operations refuse non-extraction data", "[sod][guard]")
{
    CHECK_THROWS_AS(fully_faithful_check(a1_crepant()), PreconditionError);
    CHECK_THROWS_AS(block_labels(a1_crepant()), PreconditionError);
    CHECK_THROWS_AS(semiorthogonality_check(smooth_blowup()), PreconditionError);
    CHECK_THROWS_AS(generation_certificate(a1_crepant(), {iv({0, 0})}), PreconditionError);
}

TEST_CASE("block labels of a1-half", "[sod][blocks]")
{
    ExtractionDatum d = a1_half();
    auto blocks = block_labels(d);
    CHECK(blocks.size() == 4);
    std::set<Rational> ws;
    for (const auto& b : blocks) {
        ws.insert(b.w);
        CHECK(b.w > 0);
        CHECK(b.w <= -d.sigma());
    }
    CHECK(ws == std::set<Rational>{q(1, 2), 1});

    BlockLabel b = make_block(d, iv({1, 0}));
    CHECK(b.witness == 0);
    CHECK(b.w == q(1, 2));
    CHECK_FALSE(block_witness(d, iv({3, 0})));
}

TEST_CASE("block residues of a1-half against a brute-force witness scan", "[sod][blocks]")
{
    ExtractionDatum d = a1_half();
    for (long long k1 = -6; k1 <= 6; ++k1)
        for (long long k2 = -6; k2 <= 6; ++k2) {
            int found = 0;
            for (long long k3 = -10; k3 <= 10; ++k3) {
                Rational w = q(k1 + k2, 2) - 2 * Rational(k3);
                if (w > 0 && w <= 1) ++found;
            }
            long long res = (((k1 + k2) % 4) + 4) % 4;
            bool expect = res == 1 || res == 2;
            CHECK((found == 1) == expect);
            CHECK(found <= 1);
            CHECK(block_witness(d, iv({k1, k2})).has_value() == expect);
        }
}

TEST_CASE("semiorthogonality_check examples", "[sod][so]")
{
    ExtractionDatum d = a1_half();
    std::vector<IntVector> spanning;
    for (const auto& s : spanning_classes(d)) spanning.push_back(s.representative);
    std::vector<BlockLabel> blocks = {make_block(d, iv({1, 0})), make_block(d, iv({2, 0}))};
    CheckReport rep = semiorthogonality_check(d, {iv({0, 0, 0})}, blocks);
    CHECK(rep.passed());
    const CheckRecord* r = find_record(rep, "so.image_vs_block", "l=[0,0,0] k=[1,0] k_last=0");
    REQUIRE(r);
    CHECK(r->value == q(1, 2));
    CHECK(*r->lower == 0);
    CHECK(*r->upper == 2);

    std::size_t patterns = 0;
    for (const auto& rec : rep.records)
        if (rec.check == "so.block_vs_block") {
            ++patterns;
            CHECK(rec.value > -2);
            CHECK(rec.value < 0);
            CHECK(rec.subject.rfind("k=[1,0] k'=[2,0]", 0) == 0);
        }
    CHECK(patterns == 4);

    CheckReport self = semiorthogonality_check(d, {}, {make_block(d, iv({1, 0}))});
    CHECK(self.records.empty());
    CHECK(semiorthogonality_check(d).passed());
}

TEST_CASE("window dichotomy over a box", "[sod][window]")
{
    for (const ExtractionDatum& d : {a1_half()}) {
        for (long long k1 = -6; k1 <= 6; ++k1)
            for (long long k2 = -6; k2 <= 6; ++k2) {
                IntVector k = iv({k1, k2});
                WindowPosition pos = window_position(d, k);
                Rational w = weighted_sum(d, iv({k1, k2, 0})) - d.exceptional_step() * Rational(pos.k_last);
                CHECK(w == pos.w);
                bool span = w > -d.sigma_alpha() && w <= 0;
                bool block = w > 0 && w <= -d.sigma();
                CHECK(span != block);
                CHECK(pos.spanning == span);
                CHECK(block_witness(d, k).has_value() == block);
                if (span) CHECK(in_pushforward_window(d, iv({k1, k2, pos.k_last.convert_to<long long>()})));
            }
    }
}

TEST_CASE("generation certificate examples", "[sod][certificate]")
{
    ExtractionDatum d = a1_half();
    GenerationCertificate c0 = generation_certificate(d, {iv({0, 0})});
    REQUIRE(c0.nodes.size() == 1);
    CHECK(c0.nodes.at("[0,0]").kind == NodeKind::LeafSpan);

    GenerationCertificate c1 = generation_certificate(d, {iv({1, 0})});
    const CertificateNode& root = c1.nodes.at("[1,0]");
    CHECK(root.kind == NodeKind::Koszul);
    CHECK(root.w == q(1, 2));
    CHECK(root.k_last == 0);
    CHECK(std::set<std::string>(root.children.begin(), root.children.end()) ==
          std::set<std::string>{"[0,0]", "[1,-1]", "[0,-1]", "block[1,0]"});
    CHECK(c1.nodes.at("[0,0]").kind == NodeKind::LeafSpan);
    CHECK(c1.nodes.at("block[1,0]").kind == NodeKind::LeafBlock);
    CHECK(verify_certificate(d, c1).ok());

    GenerationCertificate empty = generation_certificate(d, {});
    CHECK(empty.nodes.empty());
    CHECK(empty.targets.empty());
    CHECK(verify_certificate(d, empty).ok());
}

TEST_CASE("certificate round trip over the box", "[sod][certificate]")
{
    ExtractionDatum d = a1_half();
    std::vector<IntVector> targets;
    for (long long k1 = -6; k1 <= 6; ++k1)
        for (long long k2 = -6; k2 <= 6; ++k2) targets.push_back(iv({k1, k2}));
    GenerationCertificate c = generation_certificate(d, targets);
    CertificateVerdict v = verify_certificate(d, c);
    CHECK(v.ok());
    CHECK(c.roots.size() == targets.size());
}

TEST_CASE("verify_certificate names violations", "[sod][certificate]")
{
    ExtractionDatum d = a1_half();

    SECTION("measure")
    {
        GenerationCertificate c = generation_certificate(d, {iv({1, 0})});
        CertificateNode& child = c.nodes.at("[0,0]");
        child.k = iv({2, 0});
        CertificateVerdict v = verify_certificate(d, c);
        CHECK_FALSE(v.ok());
        CHECK(v.has(ViolationKind::MeasureViolation));
    }
    SECTION("leaf outside both windows")
    {
        GenerationCertificate c;
        c.targets = {iv({1, 0})};
        c.roots = {"[1,0]"};
        c.nodes["[1,0]"] = CertificateNode{"[1,0]", NodeKind::LeafSpan, iv({1, 0}), Integer(0), q(1, 2), {}};
        CertificateVerdict v = verify_certificate(d, c);
        CHECK_FALSE(v.ok());
        CHECK(v.has(ViolationKind::LeafViolation));
    }
    SECTION("cycle")
    {
        GenerationCertificate c = generation_certificate(d, {iv({1, 0})});
        c.nodes.at("[0,0]").kind = NodeKind::Koszul;
        c.nodes.at("[0,0]").children = {"[1,0]"};
        CHECK(verify_certificate(d, c).has(ViolationKind::Cycle));
    }
    SECTION("missing corner")
    {
        GenerationCertificate c = generation_certificate(d, {iv({1, 0})});
        c.nodes.at("[1,0]").children.pop_back();
        CHECK(verify_certificate(d, c).has(ViolationKind::CornerViolation));
    }
    SECTION("unreachable target")
    {
        GenerationCertificate c = generation_certificate(d, {iv({1, 0})});
        c.targets.push_back(iv({2, 0}));
        CHECK(verify_certificate(d, c).has(ViolationKind::UnreachableTarget));
    }
    SECTION("euler replay mismatch")
    {
        GenerationCertificate c = generation_certificate(d, {iv({1, 0})});
        CertificateReplay replay{[](const IntVector&) { return Integer(0); }, [](const IntVector&) { return Integer(1); }};
        CertificateVerdict v = verify_certificate(d, c, &replay);
        CHECK(v.has(ViolationKind::EulerMismatch));
        CHECK(v.koszul_nodes_replayed == 1);
    }
}

TEST_CASE("block dedup on a1-half", "[sod][dedup]")
{
    ExtractionDatum d = a1_half();
    CHECK(same_block(d, iv({1, 0}), iv({3, 2})));
    CHECK_FALSE(same_block(d, iv({1, 0}), iv({0, 1})));
    auto blocks = block_labels(d);
    for (const auto& p : block_dedup(d, blocks)) {
        CHECK(blocks[p.first].w == blocks[p.second].w);
        CHECK_FALSE(p.same_block);
    }
}
