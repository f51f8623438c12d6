#include <gtest/gtest.h>

#include <random>

#include "gxstpir/capacity.hpp"
#include "gxstpir/scheme.hpp"
#include "support.hpp"

using namespace gxstpir;
using namespace gxstpir::scheme;
using model::make_pattern;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

Vec run_answers(const SchemeInstance& inst, const std::vector<ServerStorage>& storage,
                const std::vector<Query>& queries) {
  Vec out;
  for (int n = 1; n <= inst.n_servers(); ++n)
    out.push_back(answer(inst, storage[n - 1], queries[n - 1]));
  return out;
}

struct Session {
  MessageStore messages;
  Vec decoded;
};

Session retrieve_once(const SchemeInstance& inst, const Retrieve& r, std::uint64_t msg_seed,
                      std::uint64_t noise_seed) {
  noise::NoiseTape mtape(msg_seed), ntape(noise_seed);
  auto messages = random_messages(inst.field, inst.pattern, inst.block_length, mtape);
  auto storage = encode_storage(inst, messages, storage_noise(inst, ntape));
  auto queries = gen_queries(inst, r, query_noise(inst, ntape));
  return {messages, decode(inst, run_answers(inst, storage, queries), r)};
}

model::StoragePattern ex2() { return make_pattern(5, {{1, 3, 4}, {3, 4, 5}, {2, 3, 5}}, 2); }
model::StoragePattern ex5() {
  return make_pattern(5, {{1, 2, 3}, {2, 3, 4}, {1, 3, 5}, {2, 4}}, 2);
}
model::StoragePattern ex6() {
  return make_pattern(8, {{1, 2, 3}, {1, 3, 4}, {4, 5, 7}, {4, 6, 7}, {7, 8}}, 2);
}

}  // namespace

TEST(BuildInstance, Example2) {
  auto inst = build_instance(ex2(), 0, 1);
  EXPECT_EQ(inst.block_length, 2);
  EXPECT_EQ(inst.n_servers(), 5);
  EXPECT_EQ(inst.field.modulus(), 11u);
}

TEST(BuildInstance, TruncatesOverReplicatedSets) {
  auto inst = build_instance(make_pattern(5, {{1, 3, 4}, {1, 3, 4, 5}, {2, 3, 5}}), 0, 1);
  EXPECT_EQ(inst.pattern.servers(2), (std::vector<int>{1, 3, 4}));
  EXPECT_EQ(inst.original.servers(2), (std::vector<int>{1, 3, 4, 5}));
}

TEST(BuildInstance, Degenerate) {
  EXPECT_EQ(code_of([] { build_instance(make_pattern(3, {{1, 2}}), 1, 1); }),
            ErrorCode::DegenerateCapacity);
  EXPECT_EQ(code_of([] { build_instance(make_pattern(3, {{1, 2, 3}}), 0, 1, 4); }),
            ErrorCode::FieldTooSmall);
}

TEST(EncodeStorage, PlaintextWhenNoSecurity) {
  auto inst = build_instance(ex2(), 0, 1);
  noise::NoiseTape tape(4);
  auto msgs = random_messages(inst.field, inst.pattern, inst.block_length, tape);
  auto storage = encode_storage(inst, msgs, storage_noise(inst, tape));
  for (int n = 1; n <= 5; ++n) {
    EXPECT_EQ(storage[n - 1].shares.size(), model::server_index(inst.pattern, n).size());
    for (const auto& [m, blocks] : storage[n - 1].shares) EXPECT_EQ(blocks, msgs.rows[m - 1]);
  }
}

TEST(EncodeStorage, SingleShareFormula) {
  auto inst = build_instance(make_pattern(2, {{1, 2}}), 1, 0, 7);
  ASSERT_EQ(inst.beta(1).value(), 1u);
  auto msgs = zero_messages(inst.field, inst.pattern, 1);
  msgs.rows[0][0][0] = inst.field.elem(3);
  auto z = zero_noise(inst, 1);
  z.z[0][0][0][0] = inst.field.elem(2);
  auto storage = encode_storage(inst, msgs, z);
  EXPECT_EQ(storage[0].shares.at(1)[0][0], inst.field.zero());
}

TEST(EncodeStorage, ShapeErrors) {
  auto inst = build_instance(ex2(), 0, 1);
  auto msgs = zero_messages(inst.field, inst.pattern, 1);
  EXPECT_EQ(code_of([&] { encode_storage(inst, msgs, zero_noise(inst, 0)); }),
            ErrorCode::DimensionMismatch);
}

TEST(Shares, AnyXPlusOneReconstructAnyXDoNot) {
  std::mt19937_64 rng(31);
  for (int x = 1; x <= 2; ++x) {
    auto p = make_pattern(4, {{1, 2, 3, 4}, {1, 2, 3}});
    auto inst = build_instance(p, x, 0);
    for (int trial = 0; trial < 5; ++trial) {
      noise::NoiseTape tape(rng());
      auto msgs = random_messages(inst.field, inst.pattern, inst.block_length, tape);
      auto storage = encode_storage(inst, msgs, storage_noise(inst, tape));
      for (int m = 1; m <= inst.num_sets(); ++m)
        for (int l = 1; l <= inst.block_length; ++l) {
          model::for_each_combination(inst.pattern.servers(m), x + 1, [&](const std::vector<int>& s) {
            EXPECT_TRUE(shares_determine_symbol(inst, m, l, s));
            Vec shares;
            for (int n : s) shares.push_back(storage[n - 1].shares.at(m)[l - 1][0]);
            EXPECT_EQ(reconstruct_symbol(inst, m, l, s, shares), msgs.symbol(m, 1, l));
          });
          model::for_each_combination(inst.pattern.servers(m), x, [&](const std::vector<int>& s) {
            EXPECT_FALSE(shares_determine_symbol(inst, m, l, s));
          });
        }
    }
  }
}

TEST(Queries, NoPrivacyMeansScaledDemand) {
  auto inst = build_instance(ex2(), 0, 0);
  Retrieve r{2, 1};
  auto qs = gen_queries(inst, r, query_noise(inst, noise::NoiseTape(9)));
  for (int n = 1; n <= inst.n_servers(); ++n)
    for (const auto& [m, blocks] : qs[n - 1].entries)
      for (int l = 1; l <= inst.block_length; ++l) {
        const auto scale = inst.v(m, n) / inst.shifted(l, n);
        for (int k = 1; k <= inst.pattern.count(m); ++k) {
          const auto f = (m == r.mu && k == r.kappa) ? inst.field.one() : inst.field.zero();
          EXPECT_EQ(blocks[l - 1][k - 1], scale * f);
        }
      }
}

TEST(Queries, UndesiredSetsCarryOnlyNoise) {
  auto inst = build_instance(ex2(), 0, 1);
  auto qs = gen_queries(inst, Retrieve{1, 2}, zero_noise(inst, 1));
  for (const auto& q : qs)
    for (const auto& [m, blocks] : q.entries)
      if (m != 1) {
        for (const auto& b : blocks)
          for (const auto& e : b) EXPECT_TRUE(e.is_zero());
      }
}

TEST(Queries, DemandErrors) {
  auto inst = build_instance(ex2(), 0, 1);
  auto z = zero_noise(inst, 1);
  EXPECT_EQ(code_of([&] { gen_queries(inst, Retrieve{4, 1}, z); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { gen_queries(inst, Retrieve{1, 3}, z); }), ErrorCode::InvalidArgument);
  Compute c;
  c.lambda.assign(3, Vec(2, inst.field.one()));
  EXPECT_EQ(code_of([&] { gen_queries(inst, c, z); }), ErrorCode::ComputeModeUnavailable);
}

TEST(Answer, EmptyAndScalar) {
  PrimeField f(7);
  ServerStorage s{3, {}};
  Query q{3, {}};
  EXPECT_EQ(answer(f, s, q), f.zero());
  s.shares[1] = {{f.elem(3)}};
  q.entries[1] = {{f.elem(5)}};
  EXPECT_EQ(answer(f, s, q), f.elem(1));
  Query wrong{2, q.entries};
  EXPECT_EQ(code_of([&] { (void)answer(f, s, wrong); }), ErrorCode::InvalidArgument);
}

TEST(Decode, ScalarCase) {
  // N = rho = 2, T = 1, K = 1, L = 1.
  auto inst = build_instance(make_pattern(2, {{1, 2}}, 1), 0, 1);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto s = retrieve_once(inst, {1, 1}, seed, seed + 100);
    EXPECT_EQ(s.decoded, (Vec{s.messages.symbol(1, 1, 1)}));
  }
  noise::NoiseTape tape(5);
  auto msgs = random_messages(inst.field, inst.pattern, 1, tape);
  auto storage = encode_storage(inst, msgs, storage_noise(inst, tape));
  auto qs = gen_queries(inst, Retrieve{1, 1}, query_noise(inst, tape));
  auto ans = run_answers(inst, storage, qs);
  auto y1 = ans[0] + ans[1];
  EXPECT_EQ(y1 / compute_normalizer(inst, 1), msgs.symbol(1, 1, 1));
}

TEST(Decode, ZeroMessagesGiveZero) {
  auto inst = build_instance(ex2(), 0, 1);
  auto msgs = zero_messages(inst.field, inst.pattern, inst.block_length);
  noise::NoiseTape tape(3);
  auto storage = encode_storage(inst, msgs, storage_noise(inst, tape));
  auto qs = gen_queries(inst, Retrieve{3, 2}, query_noise(inst, tape));
  EXPECT_EQ(decode(inst, run_answers(inst, storage, qs), Retrieve{3, 2}),
            Vec(2, inst.field.zero()));
}

TEST(Decode, MatchesPlaintextOnRandomInstances) {
  std::mt19937_64 rng(32);
  int sessions = 0;
  for (int i = 0; i < 150; ++i) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const int x = static_cast<int>(rng() % 3), t = static_cast<int>(rng() % 3);
    if (x + t + 1 > n) continue;
    auto p = testsupport::random_pattern(rng, n, 1 + rng() % 5, x + t + 1, std::min(n, 5));
    auto inst = build_instance(p, x, t);
    for (int m = 1; m <= p.num_sets(); ++m) {
      Retrieve r{m, 1 + static_cast<int>(rng() % p.count(m))};
      auto s = retrieve_once(inst, r, rng(), rng());
      EXPECT_EQ(s.decoded, plaintext_retrieve(s.messages, r));
      EXPECT_EQ(static_cast<int>(s.decoded.size()), p.rho_min() - x - t);
      ++sessions;
    }
  }
  EXPECT_GT(sessions, 100);
}

TEST(Decode, NoiseDoesNotChangeOutput) {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 40; ++i) {
    auto p = testsupport::random_pattern(rng, 6, 4, 4, 6);
    auto inst = build_instance(p, 1, 1);
    Retrieve r{1 + static_cast<int>(rng() % 4), 1};
    const auto msg_seed = rng();
    noise::NoiseTape mtape(msg_seed);
    auto msgs = random_messages(inst.field, inst.pattern, inst.block_length, mtape);
    auto clean_storage = encode_storage(inst, msgs, zero_noise(inst, inst.x));
    auto clean = decode(inst,
                        run_answers(inst, clean_storage, gen_queries(inst, r, zero_noise(inst, inst.t))),
                        r);
    auto noisy = retrieve_once(inst, r, msg_seed, rng());
    EXPECT_EQ(noisy.decoded, clean);
  }
}

TEST(Compute, MatchesPlaintextAndRetrieve) {
  // Example 2 with T = 2 has rho_min = T + 1.
  auto inst = build_instance(ex2(), 0, 2);
  ASSERT_TRUE(compute_mode_available(inst));
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 30; ++trial) {
    noise::NoiseTape tape(rng());
    auto msgs = random_messages(inst.field, inst.pattern, 1, tape);
    auto storage = encode_storage(inst, msgs, storage_noise(inst, tape));
    Compute c;
    for (int m = 1; m <= 3; ++m)
      c.lambda.push_back({inst.field.elem(rng() % 13), inst.field.elem(rng() % 13)});
    auto qs = gen_queries(inst, c, query_noise(inst, tape));
    EXPECT_EQ(decode_compute(inst, run_answers(inst, storage, qs)),
              plaintext_compute(inst.field, msgs, c));

    Compute indicator;
    indicator.lambda.assign(3, Vec(2, inst.field.zero()));
    indicator.lambda[1][1] = inst.field.one();
    auto qi = gen_queries(inst, indicator, query_noise(inst, tape));
    auto qr = gen_queries(inst, Retrieve{2, 2}, query_noise(inst, tape));
    auto ai = run_answers(inst, storage, qi), ar = run_answers(inst, storage, qr);
    EXPECT_EQ(decode_compute(inst, ai), decode(inst, ar, Retrieve{2, 2}).front());
    EXPECT_EQ(decode_compute(inst, ai), msgs.symbol(2, 2, 1));

    Compute zero;
    zero.lambda.assign(3, Vec(2, inst.field.zero()));
    EXPECT_TRUE(decode_compute(inst, run_answers(inst, storage,
                                                 gen_queries(inst, zero, query_noise(inst, tape))))
                    .is_zero());
  }
}

TEST(Compute, NormalizerNeverVanishes) {
  // sum v_n / (1 + beta_n) is -1 / prod(-1 - beta_n) by partial fractions.
  std::mt19937_64 rng(35);
  for (int i = 0; i < 200; ++i) {
    const int n = 2 + static_cast<int>(rng() % 7);
    auto p = testsupport::random_pattern(rng, n, 1 + rng() % 5, 2, n);
    const int rho = p.rho_min();
    auto inst = build_instance(p, 0, rho - 1);
    for (int m = 1; m <= p.num_sets(); ++m) {
      auto expect = inst.field.one();
      for (int s : inst.pattern.servers(m)) expect *= -inst.field.one() - inst.beta(s);
      EXPECT_EQ(compute_normalizer(inst, m), -expect.inv());
    }
  }
}

TEST(Theorem3, Example5SevenDownloads) {
  for (int mu = 1; mu <= 4; ++mu)
    for (int kappa = 1; kappa <= 2; ++kappa) {
      auto tr = theorem3_retrieve(ex5(), 1, {mu, kappa}, 100 + mu * 10 + kappa);
      EXPECT_EQ(tr.downloads, 7);
      EXPECT_EQ(tr.decoded.size(), 2u);
      EXPECT_EQ(tr.decoded, tr.expected);
    }
}

TEST(Theorem3, Example6NineDownloads) {
  auto tr = theorem3_retrieve(ex6(), 1, {3, 1}, 77, std::vector<int>{5, 6});
  EXPECT_EQ(tr.outer_servers, (std::vector<int>{1, 2, 3, 4, 7, 8}));
  EXPECT_EQ(tr.inner_servers, (std::vector<int>{4, 7, 8}));
  EXPECT_EQ(tr.downloads, 9);
  EXPECT_EQ(tr.decoded, tr.expected);
  auto dflt = theorem3_retrieve(ex6(), 1, {5, 2}, 78);
  EXPECT_EQ(dflt.stable_set, (std::vector<int>{5, 6}));
  EXPECT_EQ(dflt.decoded, dflt.expected);
}

TEST(Theorem3, DegenerateCompositeIsPlainScheme) {
  auto p = make_pattern(4, {{1, 2, 3}, {2, 3, 4}}, 2);
  auto plan = plan_theorem3(p, 1, {});
  EXPECT_FALSE(plan.has_genie);
  EXPECT_EQ(plan.total_download(), 4);
  auto tr = theorem3_retrieve(p, 1, {2, 1}, 5, std::vector<int>{});
  EXPECT_EQ(tr.downloads, 4);
  EXPECT_EQ(tr.decoded, tr.expected);
}

TEST(Theorem3, Preconditions) {
  EXPECT_EQ(code_of([] { theorem3_retrieve(make_pattern(5, {{1, 2, 3, 4}}), 1, {1, 1}, 1); }),
            ErrorCode::PreconditionViolated);
  EXPECT_EQ(code_of([] { plan_theorem3(ex6(), 1, {4, 5}); }), ErrorCode::PreconditionViolated);
  EXPECT_EQ(code_of([] { plan_theorem3(ex6(), 1, {7}); }), ErrorCode::PreconditionViolated);
}

TEST(Theorem3, EveryStableSetDecodesWithPredictedDownload) {
  std::mt19937_64 rng(36);
  int runs = 0;
  for (int i = 0; i < 60; ++i) {
    const int n = 3 + static_cast<int>(rng() % 5);
    auto p = testsupport::random_pattern(rng, n, 1 + rng() % 5, 2, 3);
    auto t2 = model::n_r_set(p, 3);
    auto t1 = model::servers_below(p, 3);
    auto g = model::build_graph(p);
    for (std::uint32_t mask = 0; mask < (1u << t2.size()); ++mask) {
      std::vector<int> u;
      for (std::size_t b = 0; b < t2.size(); ++b)
        if (mask >> b & 1u) u.push_back(t2[b]);
      if (!g.is_stable(u) || static_cast<int>(u.size()) == n) continue;
      Retrieve r{1 + static_cast<int>(rng() % p.num_sets()), 1};
      auto tr = theorem3_retrieve(p, 1, r, rng(), u);
      EXPECT_EQ(tr.decoded, tr.expected);
      auto nu = g.neighborhood(u);
      std::set<int> inner(nu.begin(), nu.end());
      inner.insert(t1.begin(), t1.end());
      bool genie = !t1.empty();
      for (int m = 1; m <= p.num_sets() && !genie; ++m)
        for (int s : u) genie = genie || p.stores(m, s);
      const int expect = n - static_cast<int>(u.size()) + (genie ? static_cast<int>(inner.size()) : 0);
      EXPECT_EQ(tr.downloads, expect);
      ++runs;
    }
  }
  EXPECT_GT(runs, 50);
}
