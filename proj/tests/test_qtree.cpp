#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "qtree/qtree.hpp"

using namespace qtree;

namespace {

Round nat(std::uint64_t k) { return Round::nat(k); }

// the canonical two-branch race: 1 and 3 from the root, 2 under 1, commit 3
QTree race_tree(Mode mode = Mode::SingleDecree) {
  QTree t(mode, Round::Form::Nat);
  REQUIRE(t.add(nat(1), "v1", nat(0)) == OpResult::Ok);
  REQUIRE(t.add(nat(3), "v2", nat(0)) == OpResult::Ok);
  REQUIRE(t.add(nat(2), "v1", nat(1)) == OpResult::Ok);
  REQUIRE(t.commit(nat(3)) == OpResult::Ok);
  return t;
}

}  // namespace

TEST_CASE("initial state holds exactly the committed root") {
  QTree t(Mode::SingleDecree, Round::Form::Nat);
  CHECK(t.nodes().size() == 1);
  const Node* root = t.find(nat(0));
  REQUIRE(root != nullptr);
  CHECK(root->status == NodeStatus::Committed);
  CHECK(root->parent == nat(0));
  CHECK(t.trunk() == std::vector<Round>{nat(0)});
  CHECK(!t.decided_value().has_value());
  for (std::uint64_t r = 1; r <= 5; ++r) CHECK(t.commit(nat(r)) == OpResult::Fail);
}

TEST_CASE("add grows branches and demotes lower conflicting nodes") {
  QTree t(Mode::SingleDecree, Round::Form::Nat);
  REQUIRE(t.add(nat(1), "v1", nat(0)) == OpResult::Ok);
  CHECK(t.find(nat(1))->status == NodeStatus::Added);

  // a higher round on another branch turns round 1 into a ghost
  REQUIRE(t.add(nat(3), "v2", nat(0)) == OpResult::Ok);
  CHECK(t.find(nat(3))->status == NodeStatus::Added);
  CHECK(t.find(nat(1))->status == NodeStatus::Ghost);

  // a node below an existing higher round enters as a ghost
  REQUIRE(t.add(nat(2), "v1", nat(1)) == OpResult::Ok);
  CHECK(t.find(nat(2))->status == NodeStatus::Ghost);
}

TEST_CASE("add failure cases") {
  QTree t(Mode::SingleDecree, Round::Form::Nat);
  REQUIRE(t.add(nat(1), "v1", nat(0)) == OpResult::Ok);

  SUBCASE("absent or higher parent violates the link predicate") {
    CHECK(t.add(nat(5), "v", nat(2)) == OpResult::Fail);  // 2 not in the tree
    CHECK(t.add(nat(1), "v", nat(2)) == OpResult::Fail);  // also a duplicate round
    QTree fresh(Mode::SingleDecree, Round::Form::Nat);
    CHECK(fresh.add(nat(1), "v", nat(2)) == OpResult::Fail);  // parent above child
    CHECK(fresh.add(nat(1), "v", nat(1)) == OpResult::Fail);  // parent equals child
  }
  SUBCASE("duplicate round violates the new-round predicate") {
    CHECK(t.add(nat(1), "w", nat(0)) == OpResult::Fail);
  }
  SUBCASE("zero round is rejected") {
    CHECK(t.add(nat(0), "v", nat(0)) == OpResult::Fail);
  }
  SUBCASE("value differing from a non-root parent fails in single-decree mode") {
    CHECK(t.add(nat(2), "w", nat(1)) == OpResult::Fail);
    QTree s(Mode::Smr, Round::Form::Nat);
    REQUIRE(s.add(nat(1), "v1", nat(0)) == OpResult::Ok);
    CHECK(s.add(nat(2), "w", nat(1)) == OpResult::Ok);
  }
}

TEST_CASE("extends-trunk rejects high rounds on dead branches") {
  // trunk 0 -> 3, ghost 1 hanging off the root, 5 extending the trunk
  QTree t(Mode::SingleDecree, Round::Form::Nat);
  REQUIRE(t.add(nat(1), "v1", nat(0)) == OpResult::Ok);
  REQUIRE(t.add(nat(3), "v2", nat(0)) == OpResult::Ok);
  REQUIRE(t.commit(nat(3)) == OpResult::Ok);
  REQUIRE(t.add(nat(5), "v2", nat(3)) == OpResult::Ok);
  CHECK(t.find(nat(5))->status == NodeStatus::Added);
  CHECK(t.trunk() == std::vector<Round>{nat(0), nat(3)});

  // round 4 above the trunk head but hanging off the dead branch
  CHECK(t.add(nat(4), "v1", nat(1)) == OpResult::Fail);
  // round 2 below the trunk head may still enter (as a ghost)
  CHECK(t.add(nat(2), "v1", nat(1)) == OpResult::Ok);
  CHECK(t.find(nat(2))->status == NodeStatus::Ghost);
  // extending the live branch above the trunk is fine
  CHECK(t.add(nat(6), "v2", nat(5)) == OpResult::Ok);
  CHECK(t.find(nat(6))->status == NodeStatus::Added);
}

TEST_CASE("commit promotes only added nodes") {
  QTree t = race_tree();
  CHECK(t.find(nat(3))->status == NodeStatus::Committed);
  CHECK(t.commit(nat(1)) == OpResult::Fail);  // ghost stays ghost
  CHECK(t.commit(nat(3)) == OpResult::Fail);  // already committed
  CHECK(t.commit(nat(99)) == OpResult::Fail);
  CHECK(t.trunk() == std::vector<Round>{nat(0), nat(3)});
  CHECK(t.decided_value() == std::optional<std::string>("v2"));
}

TEST_CASE("commit below the trunk head is possible on the trunk itself") {
  QTree t(Mode::SingleDecree, Round::Form::Nat);
  REQUIRE(t.add(nat(1), "v", nat(0)) == OpResult::Ok);
  REQUIRE(t.add(nat(2), "v", nat(1)) == OpResult::Ok);
  REQUIRE(t.commit(nat(2)) == OpResult::Ok);
  // round 1 is an ancestor of the committed node, still Added
  CHECK(t.find(nat(1))->status == NodeStatus::Added);
  CHECK(t.commit(nat(1)) == OpResult::Ok);
  CHECK(t.max_committed() == nat(2));
  CHECK(!t.invariant_violation().has_value());
}

TEST_CASE("conflicting is ancestry on branches, errors on unknown rounds") {
  QTree t = race_tree();
  CHECK(t.conflicting(nat(0), nat(2)) == std::optional<bool>(false));
  CHECK(t.conflicting(nat(1), nat(3)) == std::optional<bool>(true));
  CHECK(t.conflicting(nat(3), nat(1)) == std::optional<bool>(true));
  CHECK(t.conflicting(nat(1), nat(2)) == std::optional<bool>(false));
  CHECK(t.conflicting(nat(2), nat(2)) == std::optional<bool>(false));
  CHECK(!t.conflicting(nat(1), nat(9)).has_value());
}

TEST_CASE("decided_value is a single-decree query") {
  QTree t(Mode::Smr, Round::Form::Nat);
  CHECK_THROWS_AS(t.decided_value(), std::logic_error);
}

TEST_CASE("snapshot renders root first then ascending rounds") {
  QTree t = race_tree();
  CHECK(t.snapshot() ==
        "round=0 parent=0 value=- status=COMMITTED\n"
        "round=1 parent=0 value=v1 status=GHOST\n"
        "round=2 parent=1 value=v1 status=GHOST\n"
        "round=3 parent=0 value=v2 status=COMMITTED\n");
}

TEST_CASE("pair rounds order lexicographically with a zero sentinel") {
  CHECK(Round::pair(1, 0) > Round::zero(Round::Form::Pair));
  CHECK(Round::pair(1, 2) < Round::pair(2, 0));
  CHECK(Round::pair(2, 1) < Round::pair(2, 3));
  CHECK(Round::parse("2.1") == std::optional<Round>(Round::pair(2, 1)));
  CHECK(Round::parse("7") == std::optional<Round>(nat(7)));
  CHECK(!Round::parse("x").has_value());
  CHECK(!Round::parse("1.").has_value());

  QTree t(Mode::Smr, Round::Form::Pair);
  const Round zero = Round::zero(Round::Form::Pair);
  REQUIRE(t.add(Round::pair(1, 0), "a", zero) == OpResult::Ok);
  REQUIRE(t.add(Round::pair(1, 1), "b", Round::pair(1, 0)) == OpResult::Ok);
  REQUIRE(t.add(Round::pair(2, 1), "c", Round::pair(1, 0)) == OpResult::Ok);
  CHECK(t.find(Round::pair(1, 1))->status == NodeStatus::Ghost);
  CHECK(t.commit(Round::pair(2, 1)) == OpResult::Ok);
  // nat rounds are rejected by a pair-form tree
  CHECK(t.add(nat(9), "d", nat(0)) == OpResult::Fail);
}

TEST_CASE("forest instances are independent and created lazily") {
  QTreeForest f(Mode::SingleDecree, Round::Form::Nat);
  CHECK(f.commit(7, nat(1)) == OpResult::Fail);  // absent instance
  CHECK(f.instance(7) == nullptr);

  CHECK(f.add(1, nat(1), "v1", nat(0)) == OpResult::Ok);
  CHECK(f.add(2, nat(1), "v9", nat(0)) == OpResult::Ok);
  CHECK(f.instance(1)->find(nat(1))->value == "v1");
  CHECK(f.instance(2)->find(nat(1))->value == "v9");

  // the race sequence on instance 1 leaves instance 2 untouched
  CHECK(f.add(1, nat(3), "v2", nat(0)) == OpResult::Ok);
  CHECK(f.add(1, nat(2), "v1", nat(1)) == OpResult::Ok);
  CHECK(f.commit(1, nat(3)) == OpResult::Ok);
  CHECK(f.instance(1)->trunk() == std::vector<Round>{nat(0), nat(3)});
  CHECK(f.instance(2)->find(nat(1))->status == NodeStatus::Added);
}

TEST_CASE("predicates are side-effect free and add is exactly their conjunction") {
  std::mt19937_64 rng(20240811);
  for (int iter = 0; iter < 200; ++iter) {
    Mode mode = iter % 2 ? Mode::Smr : Mode::SingleDecree;
    QTree t(mode, Round::Form::Nat);
    for (int op = 0; op < 40; ++op) {
      std::uint64_t r = 1 + rng() % 8;
      std::uint64_t rp = rng() % 8;
      std::string v(1, char('a' + rng() % 3));
      if (rng() % 4 == 0) {
        t.commit(nat(r));
        continue;
      }
      bool expect = t.pred_link(nat(r), nat(rp)) && t.pred_new_round(nat(r)) &&
                    t.pred_extends_trunk(nat(r), nat(rp)) &&
                    (mode == Mode::Smr || t.pred_value_constraint(v, nat(rp)));
      std::string before = t.snapshot();
      OpResult got = t.add(nat(r), v, nat(rp));
      CHECK(expect == (got == OpResult::Ok));
      if (got == OpResult::Fail) CHECK(before == t.snapshot());  // failures mutate nothing
    }
  }
}

TEST_CASE("random operation streams keep every structural invariant") {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 150; ++iter) {
    Mode mode = iter % 2 ? Mode::Smr : Mode::SingleDecree;
    QTree t(mode, Round::Form::Nat);
    std::map<Round, NodeStatus> prev = t.status_map();
    for (int op = 0; op < 60; ++op) {
      std::uint64_t r = 1 + rng() % 10;
      if (rng() % 3 == 0) {
        t.commit(nat(r));
      } else {
        t.add(nat(r), std::string(1, char('a' + rng() % 2)), nat(rng() % 10));
      }
      auto violation = t.invariant_violation();
      if (violation) FAIL("invariant violated: ", *violation);
      // status monotonicity: Added may move to Ghost or Committed, nothing else
      std::map<Round, NodeStatus> cur = t.status_map();
      for (const auto& [round, was] : prev) {
        NodeStatus now = cur.at(round);
        if (was != now) {
          CHECK(was == NodeStatus::Added);
        }
      }
      prev = std::move(cur);
    }
  }
}
