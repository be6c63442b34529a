#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hierint/penalty.hpp"
#include "hierint/rng.hpp"

using namespace hierint;

namespace {

const std::vector<std::string> kAllFamilies = {
    "lasso", "cap:q=2", "bien", "pairwise:q=2", "block:q=2,d0=2", "nested:q=2"};

Vec random_theta(Rng& rng, int p1) {
  Vec t(p1);
  for (int i = 0; i < p1; ++i) t[i] = rng.normal();
  return t;
}

SupportSet random_hierarchical_support(Rng& rng, int p) {
  SupportSet s;
  for (int j = 0; j < p; ++j)
    if (rng.uniform01() < 0.5) s.main.insert(j);
  for (int j : s.main)
    for (int k : s.main)
      if (j < k && rng.uniform01() < 0.5) s.pairs.insert({j, k});
  return s;
}

}  // namespace

TEST_CASE("penalty values at hand-worked points") {
  InteractionIndex idx(2);
  Vec t(3);
  t << 3, 4, 0;
  CHECK(evaluate(PenaltySpec::parse("cap:q=2"), t, idx) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(evaluate(PenaltySpec::parse("pairwise:q=2"), t, idx) ==
        doctest::Approx(7.0).epsilon(1e-12));

  Vec b(3);
  b << 1, 2, 3;
  CHECK(evaluate(PenaltySpec::parse("bien"), b, idx) == doctest::Approx(9.0).epsilon(1e-12));

  Vec full(3);
  full << 3, 4, 5;
  // sqrt(34) + sqrt(41) + 5
  CHECK(evaluate(PenaltySpec::parse("cap:q=2"), full, idx) ==
        doctest::Approx(17.234076132278147).epsilon(1e-12));
  CHECK(evaluate(PenaltySpec::parse("lasso"), full, idx) ==
        doctest::Approx(12.0).epsilon(1e-12));

  for (const auto& fam : kAllFamilies) {
    InteractionIndex idx4(4);
    CHECK(evaluate(PenaltySpec::parse(fam), Vec::Zero(idx4.p1()), idx4) == 0.0);
  }

  CHECK_THROWS_AS(evaluate(PenaltySpec::parse("cap:q=2"), Vec::Zero(4), idx), DomainError);
}

TEST_CASE("spec parsing and labels round-trip") {
  auto s = PenaltySpec::parse("block:q=inf,d0=3");
  CHECK(s.family == PenaltyFamily::ContiguousBlock);
  CHECK(std::isinf(s.q));
  CHECK(s.d0 == 3);
  CHECK(PenaltySpec::parse(s.label()).label() == s.label());
  CHECK(PenaltySpec::parse("lasso").label() == "lasso");
  CHECK_THROWS_AS(PenaltySpec::parse("cap:q=0.5"), DomainError);
  CHECK_THROWS_AS(PenaltySpec::parse("unknown"), DomainError);
  CHECK_THROWS_AS(PenaltySpec::parse("block:q=2,d0=0"), DomainError);
  // block width cannot exceed the number of variables
  CHECK_THROWS_AS(PenaltySpec::parse("block:q=2,d0=5").validate(4), DomainError);
}

TEST_CASE("declared sandwich constants") {
  for (int p : {2, 5, 11}) {
    auto cap = sandwich_constants(PenaltySpec::parse("cap:q=2"), p);
    CHECK(cap.lower == 1.0);
    CHECK(cap.upper == 3.0);
    auto bien = sandwich_constants(PenaltySpec::parse("bien"), p);
    CHECK(bien.lower == 1.0);
    CHECK(bien.upper == 3.0);
    auto nested = sandwich_constants(PenaltySpec::parse("nested:q=2"), p);
    CHECK(nested.lower == 1.0);
    CHECK(nested.upper == 2.0);
    auto lasso = sandwich_constants(PenaltySpec::parse("lasso"), p);
    CHECK(lasso.lower == 1.0);
    CHECK(lasso.upper == 1.0);
  }
  auto pw = sandwich_constants(PenaltySpec::parse("pairwise:q=2"), 11);
  CHECK(pw.lower == 1.0);
  CHECK(pw.upper == doctest::Approx(1.1).epsilon(1e-12));
  auto blk = sandwich_constants(PenaltySpec::parse("block:q=2,d0=2"), 5);
  CHECK(blk.lower == 1.0);
  CHECK(blk.upper == 6.0);
}

TEST_CASE("sandwich check at hand-worked points") {
  InteractionIndex idx(2);
  Vec t(3);
  t << 3, 4, 5;
  SupportSet mains_only{{0, 1}, {}};
  auto rep = check_sandwich(PenaltySpec::parse("cap:q=2"), t, mains_only, idx);
  CHECK(rep.lower);
  CHECK(rep.upper);
  CHECK(rep.subadditive);
  // Pe(theta) - Pe(theta_S) - |theta_Sc|_1 = 17.234... - 7 - 5
  CHECK(rep.slack_lower == doctest::Approx(5.234076132278147).epsilon(1e-9));
  // 3*|theta_S|_1 - Pe(theta_S) = 21 - 7
  CHECK(rep.slack_upper == doctest::Approx(14.0).epsilon(1e-12));

  auto zero = check_sandwich(PenaltySpec::parse("cap:q=2"), Vec::Zero(3), mains_only, idx);
  CHECK(zero.lower);
  CHECK(zero.upper);
  CHECK(zero.subadditive);
  CHECK(zero.slack_lower == 0.0);
  CHECK(zero.slack_upper == 0.0);

  SupportSet broken{{0}, {{0, 1}}};
  CHECK_THROWS_AS(check_sandwich(PenaltySpec::parse("cap:q=2"), t, broken, idx), DomainError);
}

TEST_CASE("declared constants hold on random splits for four families") {
  Rng rng(31337);
  for (const auto& fam : {"lasso", "cap:q=2", "bien", "nested:q=2"}) {
    PenaltySpec spec = PenaltySpec::parse(fam);
    for (int p : {3, 5, 8}) {
      InteractionIndex idx(p);
      for (int trial = 0; trial < 300; ++trial) {
        Vec t = random_theta(rng, idx.p1());
        SupportSet s = random_hierarchical_support(rng, p);
        auto rep = check_sandwich(spec, t, s, idx);
        REQUIRE(rep.subadditive);
        REQUIRE(rep.lower);
        REQUIRE(rep.upper);
      }
    }
  }
}

TEST_CASE("pairwise family: declared upper constant fails, corrected one holds") {
  // Directed witness at p=3: a pure interaction lies in two of the pair
  // groups, so Pe(theta_S) = 2|theta_jk| while the declared constant allows
  // only (1 + 1/(p-1))|theta_S|_1 = 1.5|theta_jk|.
  InteractionIndex idx(3);
  PenaltySpec spec = PenaltySpec::parse("pairwise:q=2");
  Vec t = Vec::Zero(idx.p1());
  t[idx.pair_to_column(1, 2)] = 1.0;
  SupportSet s{{1, 2}, {{1, 2}}};
  CHECK(evaluate(spec, t, idx) == doctest::Approx(2.0).epsilon(1e-12));
  auto rep = check_sandwich(spec, t, s, idx);
  CHECK_FALSE(rep.upper);
  CHECK(rep.slack_upper == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(rep.lower);
  CHECK(rep.subadditive);

  // The corrected constant 1 + 2/(p-1) is an upper bound (each interaction
  // appears in exactly two groups) and is tight at the witness above.
  Rng rng(777);
  for (int p : {3, 5, 8}) {
    InteractionIndex idxp(p);
    double corrected = 1.0 + 2.0 / (p - 1);
    for (int trial = 0; trial < 500; ++trial) {
      Vec theta = random_theta(rng, idxp.p1());
      SupportSet sp = random_hierarchical_support(rng, p);
      auto mask = support_mask(sp, idxp);
      Vec ts = Vec::Zero(idxp.p1());
      for (int c = 0; c < idxp.p1(); ++c)
        if (mask[c]) ts[c] = theta[c];
      double pe = evaluate(PenaltySpec::parse("pairwise:q=2"), ts, idxp);
      CHECK(pe <= corrected * ts.cwiseAbs().sum() + 1e-9);
    }
  }
}

TEST_CASE("block family with d0 >= 2: no positive lower constant exists") {
  // Directed witness at p=3, d0=2, S = {main 1}: theta = (1, M, 0, ...).
  // Pe(theta) - Pe(theta_S) - |theta_Sc|_1 = sqrt(1+M^2) - M - 1 -> -1,
  // so the slack approaches -lower no matter how small lower > 0 is.
  InteractionIndex idx(3);
  PenaltySpec spec = PenaltySpec::parse("block:q=2,d0=2");
  SupportSet s{{1}, {}};
  for (double m : {10.0, 100.0, 1000.0}) {
    Vec t = Vec::Zero(idx.p1());
    t[0] = 1.0;
    t[1] = m;
    auto rep = check_sandwich(spec, t, s, idx);
    CHECK_FALSE(rep.lower);
    CHECK(rep.slack_lower == doctest::Approx(std::sqrt(1.0 + m * m) - m - 1.0).epsilon(1e-9));
    CHECK(rep.upper);
    CHECK(rep.subadditive);
  }

  // The whole-vector l1 lower bound fails too: (1,1,1) on the mains gives
  // Pe = 2*sqrt(2) < 3.
  Vec ones = Vec::Zero(idx.p1());
  ones[0] = ones[1] = ones[2] = 1.0;
  CHECK(evaluate(spec, ones, idx) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));

  // The upper constant 3*d0 does hold.
  Rng rng(555);
  for (int trial = 0; trial < 500; ++trial) {
    Vec theta = random_theta(rng, idx.p1());
    SupportSet sp = random_hierarchical_support(rng, 3);
    auto rep = check_sandwich(spec, theta, sp, idx);
    CHECK(rep.upper);
    CHECK(rep.subadditive);
  }
}

TEST_CASE("norm axioms on random inputs") {
  Rng rng(2024);
  for (const auto& fam : kAllFamilies) {
    PenaltySpec spec = PenaltySpec::parse(fam);
    for (int p : {3, 5}) {
      InteractionIndex idx(p);
      for (int trial = 0; trial < 100; ++trial) {
        Vec a = random_theta(rng, idx.p1());
        Vec b = random_theta(rng, idx.p1());
        double c = 4.0 * rng.normal();
        double ea = evaluate(spec, a, idx);
        double eb = evaluate(spec, b, idx);
        CHECK(evaluate(spec, c * a, idx) ==
              doctest::Approx(std::abs(c) * ea).epsilon(1e-9));
        CHECK(evaluate(spec, a + b, idx) <= ea + eb + 1e-9);
        CHECK(ea >= 0.0);
      }
    }
  }
}

TEST_CASE("atom decomposition reproduces the penalty value") {
  Rng rng(4242);
  for (const auto& fam : kAllFamilies) {
    PenaltySpec spec = PenaltySpec::parse(fam);
    for (int p : {3, 5, 8}) {
      InteractionIndex idx(p);
      AtomList list = atoms(spec, idx);
      CHECK(list.p1 == idx.p1());
      for (int trial = 0; trial < 500; ++trial) {
        Vec t = random_theta(rng, idx.p1());
        double direct = evaluate(spec, t, idx);
        double via_atoms = 0.0;
        for (const auto& a : list.atoms) via_atoms += atom_value(a, t);
        CHECK(std::abs(direct - via_atoms) <= 1e-10 * (1.0 + direct));
      }
    }
  }
}

TEST_CASE("every column is covered by at least one atom") {
  for (const auto& fam : kAllFamilies) {
    PenaltySpec spec = PenaltySpec::parse(fam);
    for (int p : {2, 3, 5, 8}) {
      if (spec.family == PenaltyFamily::ContiguousBlock && spec.d0 > p) continue;
      InteractionIndex idx(p);
      AtomList list = atoms(spec, idx);
      std::vector<bool> seen(idx.p1(), false);
      for (const auto& a : list.atoms) {
        CHECK(a.weight > 0);
        for (int c : a.cols) {
          REQUIRE(c >= 0);
          REQUIRE(c < idx.p1());
          seen[c] = true;
        }
      }
      for (int c = 0; c < idx.p1(); ++c) CHECK(seen[c]);
    }
  }
}

TEST_CASE("atom structure at p=2 matches the hand-read decomposition") {
  InteractionIndex idx(2);
  AtomList cap = atoms(PenaltySpec::parse("cap:q=2"), idx);
  REQUIRE(cap.atoms.size() == 3);
  int lq_count = 0, l1_count = 0;
  for (const auto& a : cap.atoms) {
    if (a.kind == AtomNorm::Lq) {
      ++lq_count;
      CHECK(a.cols.size() == 2);
      CHECK(a.cols[1] == 2);  // the single interaction column
      CHECK(a.weight == 1.0);
    } else {
      ++l1_count;
      CHECK(a.cols == std::vector<int>{2});
      CHECK(a.weight == 1.0);
    }
  }
  CHECK(lq_count == 2);
  CHECK(l1_count == 1);

  AtomList lasso = atoms(PenaltySpec::parse("lasso"), idx);
  REQUIRE(lasso.atoms.size() == 1);
  CHECK(lasso.atoms[0].kind == AtomNorm::L1);
  CHECK(lasso.atoms[0].cols == std::vector<int>{0, 1, 2});

  AtomList bien = atoms(PenaltySpec::parse("bien"), idx);
  int max_atoms = 0;
  for (const auto& a : bien.atoms)
    if (a.kind == AtomNorm::MaxAbsL1) ++max_atoms;
  CHECK(max_atoms == 2);
}

TEST_CASE("block with d0=1 is the same penalty as cap") {
  Rng rng(9);
  for (int p : {2, 4, 6}) {
    InteractionIndex idx(p);
    PenaltySpec cap = PenaltySpec::parse("cap:q=2");
    PenaltySpec blk = PenaltySpec::parse("block:q=2,d0=1");
    for (int trial = 0; trial < 100; ++trial) {
      Vec t = random_theta(rng, idx.p1());
      CHECK(evaluate(cap, t, idx) == doctest::Approx(evaluate(blk, t, idx)).epsilon(1e-12));
    }
    // and the group atoms coincide column-for-column
    AtomList ca = atoms(cap, idx);
    AtomList ba = atoms(blk, idx);
    auto lq_cols = [](const AtomList& l) {
      std::vector<std::vector<int>> out;
      for (const auto& a : l.atoms)
        if (a.kind == AtomNorm::Lq) out.push_back(a.cols);
      return out;
    };
    CHECK(lq_cols(ca) == lq_cols(ba));
  }
}

TEST_CASE("l1 envelope: value between |theta|_1 and 3*d0*|theta|_1") {
  Rng rng(101);
  for (const auto& fam : kAllFamilies) {
    PenaltySpec spec = PenaltySpec::parse(fam);
    bool lower_known_broken =
        spec.family == PenaltyFamily::ContiguousBlock && spec.d0 >= 2;
    double d0_eff = spec.family == PenaltyFamily::ContiguousBlock ? spec.d0 : 1.0;
    for (int p : {3, 5, 8}) {
      InteractionIndex idx(p);
      for (int trial = 0; trial < 200; ++trial) {
        Vec t = random_theta(rng, idx.p1());
        double pe = evaluate(spec, t, idx);
        double l1 = t.cwiseAbs().sum();
        CHECK(pe <= 3.0 * d0_eff * l1 + 1e-9);
        if (!lower_known_broken) CHECK(pe >= l1 - 1e-9);
      }
    }
  }
}
