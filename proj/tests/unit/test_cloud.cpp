#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "harmmtd/cloud.hpp"
#include "harmmtd/error.hpp"

using namespace harmmtd;
using fx::code_of;

namespace {

CloudState small() {
  return fx::Builder()
      .host("h1", 2)
      .host("h2", 1)
      .host("h3", 0)
      .vm("a", "h1", fx::windows(), true)
      .vm("b", "h1", fx::ubuntu())
      .target("db", "h2", fx::ubuntu())
      .edge("a", "b")
      .edge("b", "db")
      .build()
      .cloud;
}

}  // namespace

TEST(CloudState, ValidatesConstruction) {
  EXPECT_EQ(code_of([] { fx::Builder().host("h", 1).vm("a", "h", {}).vm("b", "h", {}).target("db", "h", {}).build(); }),
            ErrorCode::CapacityExceeded);
  EXPECT_EQ(code_of([] { fx::Builder().host("h", 1).vm("a", "x", {}).target("db", "h", {}).build(); }),
            ErrorCode::UnknownHost);
  EXPECT_EQ(code_of([] { fx::Builder().host("h", 2).vm("a", "h", {}).vm("a", "h", {}).target("db", "h", {}).build(); }),
            ErrorCode::DuplicateId);
  EXPECT_EQ(code_of([] { fx::Builder().host("h", 2).host("h", 2).target("db", "h", {}).build(); }),
            ErrorCode::DuplicateId);
  EXPECT_EQ(code_of([] { fx::Builder().host("h", 2).vm("a", "h", {}).build(); }), ErrorCode::MissingTarget);
  EXPECT_EQ(code_of([] { fx::Builder().host("h", 2).vm("@a", "h", {}).target("db", "h", {}).build(); }),
            ErrorCode::InvalidScenario);
  EXPECT_EQ(code_of([] { fx::Builder().host("h", 2).vm("db", "h", {}).target("db", "h", {}).build(); }),
            ErrorCode::DuplicateId);
}

TEST(CloudState, TargetDoesNotCountTowardCapacity) {
  EXPECT_NO_THROW(fx::Builder().host("h", 1).vm("a", "h", {}).target("db", "h", {}).build());
}

TEST(CloudState, HostLoadAndPlacement) {
  const CloudState s = small();
  EXPECT_EQ(s.host_load("h1"), 2);
  EXPECT_EQ(s.host_load("h2"), 0);
  EXPECT_EQ(s.placement().at("b"), "h1");
}

TEST(Migration, MovesOnlyTheNamedVm) {
  const CloudState before = small();
  const CloudState after = apply_migration(before, "a", "h2");
  EXPECT_EQ(after.find_vm("a")->host_id, "h2");
  EXPECT_EQ(after.find_vm("b")->host_id, "h1");
  EXPECT_EQ(before.find_vm("a")->host_id, "h1");
  EXPECT_EQ(after.find_vm("a")->attack_tree, before.find_vm("a")->attack_tree);
}

TEST(Migration, Errors) {
  const CloudState s = small();
  EXPECT_EQ(code_of([&] { apply_migration(s, "zz", "h2"); }), ErrorCode::UnknownVm);
  EXPECT_EQ(code_of([&] { apply_migration(s, "a", "zz"); }), ErrorCode::UnknownHost);
  EXPECT_EQ(code_of([&] { apply_migration(s, "a", "h1"); }), ErrorCode::NoOpMigration);
  EXPECT_EQ(code_of([&] { apply_migration(s, "a", "h3"); }), ErrorCode::CapacityExceeded);
  const CloudState moved = apply_migration(s, "a", "h2");
  EXPECT_EQ(code_of([&] { apply_migration(moved, "b", "h2"); }), ErrorCode::CapacityExceeded);
  EXPECT_EQ(code_of([&] { apply_migration(s, "db", "h1"); }), ErrorCode::UnknownVm);
}

TEST(Patch, RemovesLeafAndKeepsPlacement) {
  const CloudState s = small();
  const CloudState p = apply_patch(s, "b", "CVE-2018-15126");
  EXPECT_EQ(p.find_vm("b")->attack_tree.leaves().size(), 2u);
  EXPECT_EQ(p.placement(), s.placement());
  EXPECT_EQ(s.find_vm("b")->attack_tree.leaves().size(), 3u);
}

TEST(Patch, TargetCanBePatched) {
  const CloudState p = apply_patch(small(), "db", "CVE-2018-15126");
  EXPECT_NEAR(p.target().attack_tree.effective_severity(), 0.18 * 5.9, 1e-12);
}

TEST(Patch, Errors) {
  const CloudState s = small();
  EXPECT_EQ(code_of([&] { apply_patch(s, "zz", "CVE-2018-15126"); }), ErrorCode::UnknownVm);
  EXPECT_EQ(code_of([&] { apply_patch(s, "a", "CVE-2018-15126"); }), ErrorCode::UnknownVulnerability);
  Vulnerability fixed = fx::v1();
  fixed.patchable = false;
  const CloudState t = fx::Builder().host("h", 2).vm("a", "h", {fixed}).target("db", "h", {}).build().cloud;
  EXPECT_EQ(code_of([&] { apply_patch(t, "a", fixed.cve_id); }), ErrorCode::NotPatchable);
}
