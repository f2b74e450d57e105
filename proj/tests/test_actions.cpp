#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>

#include <json.hpp>
#include <mtg/actions.hpp>

using namespace mtg;
using nlohmann::json;

TEST_CASE("layout partitions the action space exactly") {
    const auto& layout = action_layout();
    REQUIRE(layout.size() == kNumActionCategories);
    int expected_offset = 0;
    int total = 0;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const ActionRange& r = layout[i];
        CHECK(static_cast<int>(r.category) == static_cast<int>(i));
        CHECK(r.offset == expected_offset);
        CHECK(r.count > 0);
        expected_offset += r.count;
        total += r.count;
    }
    CHECK(total == kNumActions);
    CHECK(kNumActions == 478);
}

TEST_CASE("frozen offsets and widths") {
    const auto& layout = action_layout();
    auto block = [&](ActionCategory c) { return layout[static_cast<int>(c)]; };
    CHECK(block(ActionCategory::PASS).offset == 0);
    CHECK(block(ActionCategory::PASS).count == 1);
    CHECK(block(ActionCategory::KEEP).offset == 1);
    CHECK(block(ActionCategory::MULLIGAN).offset == 2);
    CHECK(block(ActionCategory::CONFIRM).offset == 3);
    CHECK(block(ActionCategory::CANCEL).offset == 4);
    CHECK(block(ActionCategory::AUTO_PAY).offset == 5);
    CHECK(block(ActionCategory::BOTTOM).offset == 6);
    CHECK(block(ActionCategory::BOTTOM).count == 10);
    CHECK(block(ActionCategory::DISCARD).offset == 16);
    CHECK(block(ActionCategory::DISCARD).count == 10);
    CHECK(block(ActionCategory::PLAY_LAND).offset == 26);
    CHECK(block(ActionCategory::PLAY_LAND).count == 10);
    CHECK(block(ActionCategory::CAST_SORCERY).offset == 36);
    CHECK(block(ActionCategory::CAST_SORCERY).count == 10);
    CHECK(block(ActionCategory::CAST_INSTANT).offset == 46);
    CHECK(block(ActionCategory::CAST_INSTANT).count == 10);
    CHECK(block(ActionCategory::ACTIVATE).offset == 56);
    CHECK(block(ActionCategory::ACTIVATE).count == 60);
    CHECK(block(ActionCategory::ATTACK_TOGGLE).offset == 116);
    CHECK(block(ActionCategory::ATTACK_TOGGLE).count == 60);
    CHECK(block(ActionCategory::BLOCK_SELECT_ATTACKER).offset == 176);
    CHECK(block(ActionCategory::BLOCK_SELECT_ATTACKER).count == 60);
    CHECK(block(ActionCategory::BLOCK_SELECT_BLOCKER).offset == 236);
    CHECK(block(ActionCategory::BLOCK_SELECT_BLOCKER).count == 60);
    CHECK(block(ActionCategory::TARGET).offset == 296);
    CHECK(block(ActionCategory::TARGET).count == 122);
    CHECK(block(ActionCategory::MANA_SOURCE).offset == 418);
    CHECK(block(ActionCategory::MANA_SOURCE).count == 60);
}

TEST_CASE("index to (category, slot) and back is a bijection") {
    for (int a = 0; a < kNumActions; ++a) {
        const ActionCategory c = action_category(a);
        const int slot = action_slot(a);
        CHECK(slot >= 0);
        CHECK(action_index(c, slot) == a);
    }
}

TEST_CASE("action_index rejects out-of-range slots") {
    CHECK_THROWS(action_index(ActionCategory::PASS, 1));
    CHECK_THROWS(action_index(ActionCategory::BOTTOM, 10));
    CHECK_THROWS(action_index(ActionCategory::TARGET, 122));
    CHECK_THROWS(action_index(ActionCategory::MANA_SOURCE, -1));
}

TEST_CASE("target slots cover both battlefields and both players") {
    CHECK(kTargetOwnPlayerSlot == 120);
    CHECK(kTargetOppPlayerSlot == 121);
    CHECK(action_index(ActionCategory::TARGET, 0) == 296);
    CHECK(action_index(ActionCategory::TARGET, kTargetOppPlayerSlot) == 417);
}

TEST_CASE("action names are unique and mention the category") {
    std::set<std::string> names;
    for (int a = 0; a < kNumActions; ++a) {
        const std::string n = action_name(a);
        CHECK(n.find(action_category_name(action_category(a))) != std::string::npos);
        names.insert(n);
    }
    CHECK(names.size() == static_cast<std::size_t>(kNumActions));
}

TEST_CASE("mask set, test, count and legal agree") {
    ActionMask m;
    CHECK(m.count() == 0);
    CHECK(m.legal().empty());
    m.set(0);
    m.set(ActionCategory::TARGET, 5);
    m.set(477);
    CHECK(m.count() == 3);
    CHECK(m.test(0));
    CHECK(m.test(301));
    CHECK(m.test(477));
    CHECK(!m.test(1));
    const std::vector<int> legal = m.legal();
    REQUIRE(legal.size() == 3);
    CHECK(legal[0] == 0);
    CHECK(legal[1] == 301);
    CHECK(legal[2] == 477);
    ActionMask m2;
    m2.set(0);
    m2.set(301);
    m2.set(477);
    CHECK(m == m2);
}

TEST_CASE("layout json export matches the in-process table") {
    const json j = json::parse(action_layout_json());
    REQUIRE(j.contains("blocks"));
    CHECK(j["num_actions"].get<int>() == kNumActions);
    const auto& layout = action_layout();
    REQUIRE(j["blocks"].size() == layout.size());
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& jc = j["blocks"][i];
        CHECK(jc["category"].get<std::string>() ==
              action_category_name(layout[i].category));
        CHECK(jc["offset"].get<int>() == layout[i].offset);
        CHECK(jc["count"].get<int>() == layout[i].count);
    }
    CHECK(j["target_slots"]["own_player"].get<int>() == kTargetOwnPlayerSlot);
    CHECK(j["target_slots"]["opponent_player"].get<int>() == kTargetOppPlayerSlot);
}
