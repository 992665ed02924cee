#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pvi/convex_laws.hpp"

using namespace pvi;

TEST_CASE("law suite passes on every built-in kind") {
  LawConfig cfg;
  cfg.n_samples = 150;
  cfg.seed = 20240817;
  for (const auto& [name, phi] : builtin_law_instances()) {
    CAPTURE(name);
    const LawReport rep = run_convex_laws(phi, cfg);
    CHECK(rep.checks > 0);
    for (const auto& v : rep.violations) {
      CAPTURE(v.law);
      CAPTURE(v.detail);
      CHECK(false);
    }
    CHECK(rep.ok());
    CHECK(rep.prop2_agree >= 0.99 * rep.prop2_total);
  }
}

TEST_CASE("law suite flags a negated quadratic injected through the test hook") {
  LawConfig cfg;
  cfg.n_samples = 50;
  cfg.seed = 7;
  const auto broken = ConvexFunction::quadratic_unchecked(-Matrix::Identity(2, 2));
  const LawReport rep = run_convex_laws(broken, cfg);
  CHECK_FALSE(rep.ok());
  bool saw_monotone_or_firm = false;
  for (const auto& v : rep.violations)
    if (v.law == "subdiff_monotone_prox" || v.law == "prox_firm" || v.law == "prox_nonexpansive")
      saw_monotone_or_firm = true;
  CHECK(saw_monotone_or_firm);
}

TEST_CASE("law suite is deterministic for a fixed seed") {
  LawConfig cfg;
  cfg.n_samples = 40;
  cfg.seed = 99;
  const auto phi = ConvexFunction::separable_abs(2);
  const LawReport a = run_convex_laws(phi, cfg);
  const LawReport b = run_convex_laws(phi, cfg);
  CHECK(a.checks == b.checks);
  CHECK(a.violations.size() == b.violations.size());
  CHECK(a.prop2_agree == b.prop2_agree);
}
