#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "screensum/common.hpp"
#include "screensum/screenplay.hpp"

namespace testutil {

using screensum::Rng;

inline const std::vector<std::string>& name_pool() {
  static const std::vector<std::string> pool = {"ALPHA", "BRAVO", "CHARLIE",
                                                "DELTA", "ECHO"};
  return pool;
}

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> pool = {
      "night", "rain",  "door",  "quiet", "runs",   "finds", "map",
      "home",  "waits", "light", "storm", "answer", "gun",   "truth"};
  return pool;
}

inline std::string random_sentence(Rng& rng, int min_words = 2,
                                   int max_words = 8) {
  int count = min_words + static_cast<int>(rng.uniform_int(
                              static_cast<uint64_t>(max_words - min_words + 1)));
  std::ostringstream out;
  for (int i = 0; i < count; ++i) {
    if (i) out << ' ';
    out << word_pool()[rng.uniform_int(word_pool().size())];
  }
  return out.str();
}

struct SyntheticLimits {
  int max_scenes = 10;
  int max_characters = 5;
  int max_dialogues = 20;
  bool with_cast = false;
};

// Random screenplay as canonical XML; every dialogue speaker comes from the
// character pool, so the registry size is the number of distinct speakers
// (plus cast entries when enabled).
inline std::string random_screenplay_xml(Rng& rng, const SyntheticLimits& limits,
                                         int serial) {
  int scene_count =
      1 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(limits.max_scenes)));
  int character_count = 1 + static_cast<int>(rng.uniform_int(
                                static_cast<uint64_t>(limits.max_characters)));
  int dialogue_count =
      static_cast<int>(rng.uniform_int(static_cast<uint64_t>(limits.max_dialogues + 1)));

  std::vector<std::vector<std::string>> scene_lines(scene_count);
  for (int d = 0; d < dialogue_count; ++d) {
    int scene = static_cast<int>(rng.uniform_int(scene_count));
    const std::string& speaker =
        name_pool()[rng.uniform_int(static_cast<uint64_t>(character_count))];
    scene_lines[scene].push_back("<dialogue speaker=\"" + speaker + "\">" +
                                 random_sentence(rng) + "</dialogue>");
  }

  std::ostringstream out;
  out << "<screenplay id=\"movie-" << serial << "\" title=\"Movie " << serial
      << "\">\n";
  for (int s = 0; s < scene_count; ++s) {
    out << "  <scene heading=\"SCENE " << s << "\"";
    if (limits.with_cast && rng.uniform() < 0.3) {
      out << " cast=\""
          << name_pool()[rng.uniform_int(static_cast<uint64_t>(character_count))]
          << "\"";
    }
    out << ">\n";
    if (rng.uniform() < 0.8)
      out << "    <action>" << random_sentence(rng) << "</action>\n";
    for (const auto& line : scene_lines[s]) out << "    " << line << "\n";
    out << "  </scene>\n";
  }
  out << "</screenplay>\n";
  return out.str();
}

}  // namespace testutil
