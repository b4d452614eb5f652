// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

// A keyed script that drives every simulation prompt for a two-task garden
// scenario. Each task ends after two identical exchanges: the end-of-task
// matcher looks for the doubled exchange right before the question.

#pragma once

#include <string>
#include <vector>

#include <fmt/format.h>

#include "slotweaver/backend.hpp"
#include "slotweaver/seqio.hpp"

namespace world {

inline const std::string kLayout = "design a garden layout";
inline const std::string kPlants = "choose plants";

inline const std::string kScenarioList =
    "1. Homeowner is getting help from Landscaper in order to design a garden layout, "
    "choose plants.\n"
    "2. Here is another idea without the template.\n"
    "3. \"Tenant is getting help from Gardener in order to design a garden layout, and "
    "choose plants\"\n"
    "4. homeowner is getting help from landscaper in order to design a garden layout, "
    "choose plants\n";

inline const std::string kUserLayout = "I want a desert style garden.";
inline const std::string kUserPlants = "I would like red flowers.";
inline const std::string kAgentLayout = "I can build a dry gravel garden.";
inline const std::string kAgentPlants = "Red salvia would suit you.";

// Knowledge item names never spoken aloud, and a goal value the user
// never utters; both must stay on their own side of the conversation.
inline const std::string kItemMarker = "Sage Court";
inline const std::string kHiddenGoal = "rock path";

struct Options {
  bool finish = true;
  bool knowledge_parses = true;
};

inline std::string fence(const std::string& body) { return "```\n" + body + "```\n"; }

inline std::string knowledge_items(const std::string& prefix, int n) {
  std::string out;
  for (int i = 1; i <= n; ++i) {
    out += fence(fmt::format("name = {} {}\nstyle = {}\nfeatures = {}\ncolor = red\nsize = small\n",
                             prefix, i, i % 2 ? "desert" : "cottage",
                             i % 3 ? "gravel bed" : "pond"));
    out += "\n";
  }
  return out;
}

inline std::vector<slotweaver::ScriptEntry> garden_script(const Options& o = {}) {
  using slotweaver::ScriptEntry;
  std::vector<ScriptEntry> s;
  s.push_back(ScriptEntry::on_substring("Write a numbered list of", kScenarioList));

  s.push_back(ScriptEntry::on_substring(
      "Task: " + kLayout + "\n\nDefine the slot schema",
      fence("style: overall look of the garden\nfeatures: structures or elements to include\n")));
  s.push_back(ScriptEntry::on_substring(
      "Task: " + kPlants + "\n\nDefine the slot schema",
      fence("color: flower color\nsize: mature plant size\n")));
  s.push_back(ScriptEntry::on_substring(
      "Define the knowledge schema",
      fence("name: item name\nstyle: look\nfeatures: elements\ncolor: flower color\n"
            "size: plant size\n")));

  if (o.knowledge_parses) {
    s.push_back(ScriptEntry::on_substring("realistic items", knowledge_items(kItemMarker, 8)));
  } else {
    s.push_back(ScriptEntry::on_substring("realistic items", "I cannot think of any."));
  }
  s.push_back(ScriptEntry::on_substring(
      "Task: " + kLayout + "\n\nPreference fields",
      fence("style = desert\nfeatures = " + kHiddenGoal + "\nbudget = 500\n")));
  s.push_back(ScriptEntry::on_substring("Task: " + kPlants + "\n\nPreference fields",
                                        fence("color = red\nsize = small\n")));
  s.push_back(ScriptEntry::on_substring("look similar to what", knowledge_items("Decoy", 4)));

  s.push_back(ScriptEntry::on_substring("in order to " + kLayout + ".\nYour preferences",
                                        kUserLayout));
  s.push_back(ScriptEntry::on_substring("in order to " + kPlants + ".\nYour preferences",
                                        kUserPlants));
  s.push_back(ScriptEntry::on_substring("to " + kLayout + ".\nItems you know about",
                                        kAgentLayout));
  s.push_back(ScriptEntry::on_substring("to " + kPlants + ".\nItems you know about",
                                        kAgentPlants));

  s.push_back(ScriptEntry::on_substring("Task: " + kLayout + "\nPreference fields",
                                        fence("style = desert\nwater = pond\n")));
  s.push_back(ScriptEntry::on_substring("Task: " + kPlants + "\nPreference fields",
                                        fence("color = red\n")));

  if (o.finish) {
    for (const auto& [user, agent] :
         {std::pair{kUserLayout, kAgentLayout}, std::pair{kUserPlants, kAgentPlants}}) {
      // Two full exchanges of this task end just before the question.
      s.push_back(ScriptEntry::on_substring(
          user + "\n" + "Landscaper: " + agent + "\nHomeowner: " + user + "\nLandscaper: " +
              agent + "\n\nHas",
          "Yes."));
      s.push_back(ScriptEntry::on_substring(
          user + "\n" + "Gardener: " + agent + "\nTenant: " + user + "\nGardener: " + agent +
              "\n\nHas",
          "Yes, they are done."));
    }
  }
  s.push_back(ScriptEntry::on_substring("Answer yes or no", "No"));
  return s;
}

inline std::string to_jsonl(const std::vector<slotweaver::ScriptEntry>& entries) {
  using slotweaver::ScriptEntry;
  std::string out;
  for (const ScriptEntry& e : entries) {
    slotweaver::Json j;
    if (e.match == ScriptEntry::Match::kSubstring) {
      j["match"] = {{"substring", e.substring}};
    } else if (e.match == ScriptEntry::Match::kIndex) {
      j["match"] = {{"index", e.index}};
    }
    j["response"] = e.response;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace world
