#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "seine/interactions.hpp"

using namespace seine;
using namespace seine::test;

namespace {

Segment make_segment(std::vector<std::string> tokens, std::string doc_id = "d1",
                     std::uint32_t index = 0) {
    Segment seg;
    seg.doc_id = std::move(doc_id);
    seg.index = index;
    seg.tokens = std::move(tokens);
    return seg;
}

Vocabulary tiny_vocab(std::uint32_t collection_size, std::uint32_t df_of_w) {
    // Single-term vocabulary with controlled df; idf = ln(|C| / (df + 1)).
    std::vector<Document> docs;
    for (std::uint32_t d = 0; d < collection_size; ++d) {
        docs.push_back(make_doc(padded("d", d), d < df_of_w ? "w filler" : "filler"));
    }
    return build_vocabulary(docs, 0.0, 0.0);
}

}  // namespace

TEST_CASE("schema parsing") {
    auto schema = InteractionSchema::parse("tf,iidf,cos,gauss");
    CHECK(schema.n_f() == 4);
    CHECK(schema.column(Fn::Cos) == 2);
    CHECK(schema.to_string() == "tf,iidf,cos,gauss");
    CHECK(schema.needs_embeddings());
    CHECK_FALSE(schema.needs_contextual());
    CHECK(InteractionSchema::parse("TF, LOGP").n_f() == 2);
    CHECK_FALSE(InteractionSchema::parse("tf,iidf,logp").needs_embeddings());
    CHECK_THROWS_AS(InteractionSchema::parse("tf,tf"), ConfigError);
    CHECK_THROWS_AS(InteractionSchema::parse("nope"), ConfigError);
    CHECK_THROWS_AS(InteractionSchema::parse(""), ConfigError);
}

TEST_CASE("tf counts occurrences") {
    CHECK(tf("apple", std::vector<std::string>{"apple", "banana", "apple"}) == 2.0);
    CHECK(tf("pear", std::vector<std::string>{"apple", "banana"}) == 0.0);
    CHECK(tf("apple", std::vector<std::string>{}) == 0.0);
}

TEST_CASE("indicative_idf gates idf on membership") {
    auto vocab = tiny_vocab(10, 4);
    std::vector<std::string> with_w = {"w", "filler"};
    std::vector<std::string> without_w = {"filler"};
    CHECK(indicative_idf("w", without_w, vocab) == 0.0);
    CHECK(indicative_idf("w", with_w, vocab) ==
          doctest::Approx(0.6931471805599453).epsilon(1e-12));

    SUBCASE("present yet zero-weighted when df = |C| - 1") {
        auto flat = tiny_vocab(10, 9);
        CHECK(indicative_idf("w", with_w, flat) == doctest::Approx(0.0));
    }
    SUBCASE("out-of-vocabulary term is an error") {
        CHECK_THROWS_AS(indicative_idf("zzz", with_w, vocab), Error);
    }
}

TEST_CASE("dot_sum") {
    MapEmbeddings emb(2);
    emb.set("w", {1.0f, 0.0f});
    emb.set("t", {1.0f, 0.0f});
    CHECK(dot_sum("w", std::vector<std::string>{"t"}, emb) == doctest::Approx(1.0));

    emb.set("orth", {0.0f, 1.0f});
    CHECK(dot_sum("w", std::vector<std::string>{"orth", "orth"}, emb) == doctest::Approx(0.0));

    MapEmbeddings emb2(2);
    emb2.set("w", {2.0f, 0.0f});
    emb2.set("x", {1.0f, 0.0f});
    emb2.set("y", {0.5f, 0.0f});
    CHECK(dot_sum("w", std::vector<std::string>{"x", "y"}, emb2) == doctest::Approx(3.0));
    CHECK(dot_sum("w", std::vector<std::string>{}, emb2) == 0.0);
}

TEST_CASE("cosine_sum") {
    MapEmbeddings emb(2);
    emb.set("w", {1.0f, 0.0f});
    emb.set("same", {1.0f, 0.0f});
    float inv_sqrt2 = static_cast<float>(1.0 / std::sqrt(2.0));
    emb.set("diag", {inv_sqrt2, inv_sqrt2});

    CHECK(cosine_sum("w", std::vector<std::string>{"same"}, emb) == doctest::Approx(1.0));
    CHECK(cosine_sum("w", std::vector<std::string>{"same", "diag"}, emb) ==
          doctest::Approx(1.7071067811865476).epsilon(1e-6));

    SUBCASE("zero-norm term embedding contributes zero") {
        emb.set("null", {0.0f, 0.0f});
        CHECK(cosine_sum("w", std::vector<std::string>{"null", "same"}, emb) ==
              doctest::Approx(1.0));
    }
    SUBCASE("zero-norm query embedding yields zero") {
        emb.set("zero", {0.0f, 0.0f});
        CHECK(cosine_sum("zero", std::vector<std::string>{"same"}, emb) == 0.0);
    }
}

TEST_CASE("gaussian_max") {
    MapEmbeddings emb(2);
    emb.set("w", {0.0f, 0.0f});
    emb.set("at1", {1.0f, 0.0f});
    emb.set("same", {0.0f, 0.0f});

    CHECK(gaussian_max("w", std::vector<std::string>{"at1", "same"}, emb) == doctest::Approx(1.0));
    CHECK(gaussian_max("w", std::vector<std::string>{"at1"}, emb) ==
          doctest::Approx(0.36787944117144233).epsilon(1e-12));
    CHECK(gaussian_max("w", std::vector<std::string>{}, emb) == 0.0);

    SUBCASE("wider bandwidth raises the kernel") {
        CHECK(gaussian_max("w", std::vector<std::string>{"at1"}, emb, 2.0) ==
              doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    }
}

TEST_CASE("linear_agg over contextual vectors") {
    auto base = std::make_shared<MapEmbeddings>(3);
    base->set("w", {1.0f, 1.0f, 1.0f});
    auto overlay = std::make_shared<ContextualOverlay>(base);
    overlay->add("d1", 0, 0, std::vector<float>{0.3f, 9.0f, -2.0f});

    FunctionParams params = FunctionParams::defaults(3);
    auto segment = make_segment({"w", "other"});

    SUBCASE("a = first basis vector picks the first component") {
        params.a = {1.0f, 0.0f, 0.0f};
        params.b = 0.0f;
        CHECK(linear_agg("w", segment, *overlay, params) == doctest::Approx(0.3).epsilon(1e-6));
    }
    SUBCASE("zero weights leave only the bias") {
        params.b = 0.5f;
        CHECK(linear_agg("w", segment, *overlay, params) == doctest::Approx(0.5));
    }
    SUBCASE("absent term gives 0, not the bias") {
        params.b = 0.5f;
        auto no_w = make_segment({"other", "more"});
        CHECK(linear_agg("w", no_w, *overlay, params) == 0.0);
    }
    SUBCASE("multiple occurrences average their contextual vectors") {
        overlay->add("d1", 0, 2, std::vector<float>{0.7f, 0.0f, 0.0f});
        params.a = {1.0f, 0.0f, 0.0f};
        auto two = make_segment({"w", "other", "w"});
        CHECK(linear_agg("w", two, *overlay, params) == doctest::Approx(0.5).epsilon(1e-6));
    }
}

TEST_CASE("max_softplus") {
    MapEmbeddings emb(3);
    emb.set("w", {1.0f, 0.0f, 0.0f});
    emb.set("zero", {0.0f, 0.0f, 0.0f});
    FunctionParams params = FunctionParams::defaults(3);

    SUBCASE("ln(softplus(0)) = ln(ln 2)") {
        CHECK(max_softplus("w", std::vector<std::string>{"zero"}, emb, params) ==
              doctest::Approx(-0.36651292058166435).epsilon(1e-9));
    }
    SUBCASE("zero query embedding dots to zero") {
        CHECK(max_softplus("zero", std::vector<std::string>{"zero"}, emb, params) == 0.0);
    }
    SUBCASE("max picks the dominating token") {
        emb.set("big", {5.0f, 0.0f, 0.0f});
        double big_only = max_softplus("w", std::vector<std::string>{"big"}, emb, params);
        double both = max_softplus("w", std::vector<std::string>{"zero", "big"}, emb, params);
        CHECK(both == doctest::Approx(big_only));
        CHECK(both > max_softplus("w", std::vector<std::string>{"zero"}, emb, params));
    }
    SUBCASE("softplus-only variant") {
        params.maxsp_softplus_only = true;
        CHECK(max_softplus("w", std::vector<std::string>{"zero"}, emb, params) ==
              doctest::Approx(std::log(2.0)).epsilon(1e-9));
    }
    SUBCASE("extreme components stay finite") {
        emb.set("low", {-200.0f, 0.0f, 0.0f});
        double v = max_softplus("w", std::vector<std::string>{"low"}, emb, params);
        CHECK(std::isfinite(v));
        CHECK(v == doctest::Approx(-200.0).epsilon(1e-6));
    }
}

TEST_CASE("mlp_weight") {
    auto base = std::make_shared<MapEmbeddings>(3);
    auto overlay = std::make_shared<ContextualOverlay>(base);
    overlay->add("d1", 0, 0, std::vector<float>{0.2f, 1.0f, -1.0f});
    auto segment = make_segment({"w"});

    SUBCASE("zero single layer with bias 0.7 is constant") {
        FunctionParams params = FunctionParams::defaults(3);
        params.mlp[0].bias[0] = 0.7f;
        CHECK(mlp_weight("w", segment, *overlay, params) == doctest::Approx(0.7));
    }
    SUBCASE("identity row picks the first contextual component") {
        FunctionParams params = FunctionParams::defaults(3);
        params.mlp[0].weights[0] = {1.0f, 0.0f, 0.0f};
        CHECK(mlp_weight("w", segment, *overlay, params) == doctest::Approx(0.2).epsilon(1e-6));
    }
    SUBCASE("absent term gives 0") {
        FunctionParams params = FunctionParams::defaults(3);
        params.mlp[0].bias[0] = 0.7f;
        auto no_w = make_segment({"x"});
        CHECK(mlp_weight("w", no_w, *overlay, params) == 0.0);
    }
    SUBCASE("relu between layers") {
        FunctionParams params = FunctionParams::defaults(3);
        params.mlp.clear();
        MlpLayer hidden;
        hidden.weights = {{1.0f, 0.0f, 0.0f}, {0.0f, 0.0f, 1.0f}};
        hidden.bias = {0.0f, 0.0f};
        MlpLayer out;
        out.weights = {{1.0f, 1.0f}};
        out.bias = {0.0f};
        params.mlp = {hidden, out};
        // hidden = relu(0.2, -1.0) = (0.2, 0); output = 0.2
        CHECK(mlp_weight("w", segment, *overlay, params) == doctest::Approx(0.2).epsilon(1e-6));
    }
}

TEST_CASE("log_cond_prob") {
    FunctionParams params = FunctionParams::defaults(0);
    auto vocab = tiny_vocab(10, 4);  // P("w"|C): cf=4, total tokens=14

    SUBCASE("mu = 0: plain maximum likelihood") {
        params.mu = 0.0;
        std::vector<std::string> seg = {"w", "w", "x", "y"};
        CHECK(log_cond_prob("w", seg, vocab, params) ==
              doctest::Approx(-0.6931471805599453).epsilon(1e-12));
    }
    SUBCASE("mu = 1 with P(w|C) = 0.1 and tf = 0") {
        // 10 tokens total, one of them "rare" -> P = 0.1
        std::vector<Document> docs;
        docs.push_back(make_doc("d1", "rare a b c d e f g h i"));
        auto stats = build_vocabulary(docs, 0.0, 0.0);
        REQUIRE(stats.collection_prob("rare") == doctest::Approx(0.1));
        params.mu = 1.0;
        std::vector<std::string> nine = {"a", "b", "c", "d", "e", "f", "g", "h", "i"};
        CHECK(log_cond_prob("rare", nine, stats, params) ==
              doctest::Approx(-4.605170185988091).epsilon(1e-9));
    }
    SUBCASE("absent term with mu = 0 hits the floor") {
        params.mu = 0.0;
        std::vector<std::string> seg = {"x", "y"};
        CHECK(log_cond_prob("w", seg, vocab, params) == doctest::Approx(-30.0));
    }
    SUBCASE("empty segment hits the floor") {
        CHECK(log_cond_prob("w", std::vector<std::string>{}, vocab, params) ==
              doctest::Approx(-30.0));
    }
}

TEST_CASE("params file loading") {
    TmpDir tmp;
    auto path = tmp.file("params.json", R"({
        "a": [1.0, 0.0, 0.5],
        "b": 0.25,
        "p": [0.0, 0.0, 0.0],
        "mlp": [{"weights": [[1.0, 0.0, 0.0]], "bias": [0.1]}],
        "mu": 7.5,
        "log_floor": -20.0
    })");
    auto params = FunctionParams::load(path, 3);
    CHECK(params.a == std::vector<float>{1.0f, 0.0f, 0.5f});
    CHECK(params.b == 0.25f);
    CHECK(params.mu == 7.5);
    CHECK(params.log_floor == -20.0f);
    REQUIRE(params.mlp.size() == 1);
    CHECK(params.mlp[0].bias[0] == 0.1f);

    SUBCASE("absent keys keep their defaults") {
        auto partial = FunctionParams::load(tmp.file("partial.json", R"({"mu": 3.0})"), 3);
        CHECK(partial.mu == 3.0);
        CHECK(partial.log_floor == -30.0f);
        CHECK(partial.a.size() == 3);
    }
    SUBCASE("mlp dimension mismatch errors at load") {
        auto bad = tmp.file("bad.json", R"({"mlp": [{"weights": [[1.0, 2.0]], "bias": [0.0]}]})");
        CHECK_THROWS_AS(FunctionParams::load(bad, 3), ConfigError);
    }
    SUBCASE("mlp not ending in one output errors at load") {
        auto bad = tmp.file("bad2.json",
                            R"({"mlp": [{"weights": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
                                         "bias": [0.0, 0.0]}]})");
        CHECK_THROWS_AS(FunctionParams::load(bad, 3), ConfigError);
    }
    SUBCASE("malformed json is an io error") {
        CHECK_THROWS_AS(FunctionParams::load(tmp.file("nope.json", "{"), 3), IoError);
    }
}

TEST_CASE("interaction_vector composes the schema") {
    auto vocab = tiny_vocab(10, 4);
    auto provider = std::make_shared<PseudoEmbeddings>(4, 9);
    FunctionParams params = FunctionParams::defaults(4);

    SUBCASE("tf + iidf pair") {
        auto schema = InteractionSchema::parse("tf,iidf");
        auto segment = make_segment({"w", "w", "filler"});
        auto vec = interaction_vector("w", segment, schema, nullptr, params, vocab);
        REQUIRE(vec.size() == 2);
        CHECK(vec[0] == 2.0f);
        CHECK(vec[1] == doctest::Approx(0.6931471805599453f));
    }
    SUBCASE("padding segment follows the padding invariant") {
        auto schema = InteractionSchema::parse("tf,gauss,logp");
        auto vec = interaction_vector("w", make_segment({}), schema, provider, params, vocab);
        REQUIRE(vec.size() == 3);
        CHECK(vec[0] == 0.0f);
        CHECK(vec[1] == 0.0f);
        CHECK(vec[2] == -30.0f);
    }
}

TEST_CASE("engine matches the per-function oracle on random pairs") {
    auto docs = make_random_corpus(20, 5, 80, 40, 5);
    auto vocab = build_vocabulary(docs, 0.0, 0.0);
    auto provider = std::make_shared<PseudoEmbeddings>(8, 3);

    FunctionParams params = FunctionParams::defaults(8);
    params.a = {0.1f, -0.2f, 0.3f, 0.0f, 0.5f, -0.5f, 0.25f, 1.0f};
    params.b = 0.25f;
    params.mu = 2.0;
    MlpLayer hidden;
    hidden.weights.assign(4, std::vector<float>(8));
    for (std::size_t o = 0; o < 4; ++o) {
        for (std::size_t i = 0; i < 8; ++i) {
            hidden.weights[o][i] = static_cast<float>(std::sin(static_cast<double>(o * 8 + i)));
        }
    }
    hidden.bias = {0.1f, -0.1f, 0.2f, 0.0f};
    MlpLayer out_layer;
    out_layer.weights = {{0.5f, -0.5f, 0.25f, 1.0f}};
    out_layer.bias = {0.05f};
    params.mlp = {hidden, out_layer};

    auto schema = InteractionSchema::parse("tf,iidf,dot,cos,gauss,linagg,maxsp,mlp,logp");
    InteractionEngine engine(schema, provider, params, &vocab);

    std::mt19937 rng(17);
    std::uniform_int_distribution<std::size_t> pick_doc(0, docs.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_term(0, vocab.size() - 1);

    for (int trial = 0; trial < 100; ++trial) {
        const auto& doc = docs[pick_doc(rng)];
        std::uniform_int_distribution<std::size_t> pick_len(0, doc.tokens.size());
        auto len = pick_len(rng);
        std::uniform_int_distribution<std::size_t> pick_start(0, doc.tokens.size() - len);
        auto start = pick_start(rng);
        Segment segment;
        segment.doc_id = doc.id;
        segment.index = 0;
        segment.tokens.assign(doc.tokens.begin() + static_cast<std::ptrdiff_t>(start),
                              doc.tokens.begin() + static_cast<std::ptrdiff_t>(start + len));
        const auto& w = vocab.terms[pick_term(rng)];

        auto seg_ctx = engine.make_segment_context(segment);
        auto term_ctx = engine.make_term_context(w);
        std::vector<float> got(9);
        engine.evaluate(term_ctx, seg_ctx, got);

        // independent single-function route
        CHECK(got[0] == doctest::Approx(tf(w, segment.tokens)));
        CHECK(got[1] == doctest::Approx(indicative_idf(w, segment.tokens, vocab)).epsilon(1e-6));
        CHECK(rel_close(got[2], dot_sum(w, segment.tokens, *provider), 1e-5, 1e-5));
        CHECK(rel_close(got[3], cosine_sum(w, segment.tokens, *provider), 1e-5, 1e-5));
        CHECK(rel_close(got[4], gaussian_max(w, segment.tokens, *provider, params.gauss_sigma2),
                        1e-5, 1e-6));
        CHECK(rel_close(got[5], linear_agg(w, segment, *provider, params), 1e-5, 1e-6));
        CHECK(rel_close(got[6], max_softplus(w, segment.tokens, *provider, params), 1e-5, 1e-5));
        CHECK(rel_close(got[7], mlp_weight(w, segment, *provider, params), 1e-5, 1e-6));
        CHECK(rel_close(got[8], log_cond_prob(w, segment.tokens, vocab, params), 1e-5, 1e-6));

        // brute-force test-side oracle for the embedding functions
        CHECK(rel_close(got[2], ref_dot(w, segment.tokens, *provider), 1e-5, 1e-5));
        CHECK(rel_close(got[3], ref_cos(w, segment.tokens, *provider), 1e-5, 1e-5));
        if (!segment.tokens.empty()) {
            CHECK(rel_close(got[4], ref_gauss(w, segment.tokens, *provider), 1e-5, 1e-6));
            CHECK(rel_close(got[6], ref_maxsp(w, segment.tokens, *provider), 1e-5, 1e-5));
        }
        CHECK(rel_close(got[8],
                        ref_logp(w, segment.tokens, vocab.collection_prob(w), params.mu,
                                 params.log_floor),
                        1e-5, 1e-6));
    }
}

TEST_CASE("bounds, consistency, and permutation invariance") {
    auto docs = make_random_corpus(10, 5, 60, 30, 21);
    auto vocab = build_vocabulary(docs, 0.0, 0.0);
    auto provider = std::make_shared<PseudoEmbeddings>(8, 11);
    FunctionParams params = FunctionParams::defaults(8);
    auto schema = InteractionSchema::parse("tf,iidf,dot,cos,gauss,linagg,maxsp,mlp,logp");
    InteractionEngine engine(schema, provider, params, &vocab);

    std::mt19937 rng(4);
    std::uniform_int_distribution<std::size_t> pick_doc(0, docs.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_term(0, vocab.size() - 1);

    for (int trial = 0; trial < 200; ++trial) {
        const auto& doc = docs[pick_doc(rng)];
        Segment segment;
        segment.doc_id = doc.id;
        segment.tokens = doc.tokens;
        const auto& w = vocab.terms[pick_term(rng)];

        auto seg_ctx = engine.make_segment_context(segment);
        auto term_ctx = engine.make_term_context(w);
        std::vector<float> vec(9);
        engine.evaluate(term_ctx, seg_ctx, vec);

        for (float v : vec) {
            CHECK(std::isfinite(v));
        }
        CHECK(vec[4] >= 0.0f);
        CHECK(vec[4] <= 1.0f);
        CHECK(vec[8] <= 0.0f);
        CHECK(std::fabs(vec[3]) <= static_cast<float>(segment.tokens.size()) + 1e-4f);

        // tf/iidf consistency
        if (vec[1] != 0.0f) {
            CHECK(vec[0] >= 1.0f);
        }
        auto idf = vocab.idf[*vocab.id_of(w)];
        if (vec[0] >= 1.0f && idf != 0.0) {
            CHECK(vec[1] != 0.0f);
        }

        // permutation invariance
        Segment shuffled = segment;
        std::shuffle(shuffled.tokens.begin(), shuffled.tokens.end(), rng);
        auto shuffled_ctx = engine.make_segment_context(shuffled);
        std::vector<float> vec2(9);
        engine.evaluate(term_ctx, shuffled_ctx, vec2);
        for (std::size_t i = 0; i < 9; ++i) {
            if (i == 5 || i == 7) {
                continue;  // linagg/mlp read per-position contextual vectors
            }
            CHECK(rel_close(vec[i], vec2[i], 1e-9, 1e-9));
        }
    }
}

TEST_CASE("appending a perfect match never lowers the similarity sums") {
    auto provider = std::make_shared<PseudoEmbeddings>(6, 2);
    std::vector<std::string> tokens = {"alpha", "beta", "gamma"};
    std::string w = "target";
    auto extended = tokens;
    extended.push_back(w);  // E(token) == E(w) for the appended token

    CHECK(dot_sum(w, extended, *provider) >= dot_sum(w, tokens, *provider) - 1e-12);
    CHECK(cosine_sum(w, extended, *provider) >= cosine_sum(w, tokens, *provider) - 1e-12);
    CHECK(gaussian_max(w, extended, *provider) >= gaussian_max(w, tokens, *provider) - 1e-12);
    CHECK(gaussian_max(w, extended, *provider) == doctest::Approx(1.0));
}
