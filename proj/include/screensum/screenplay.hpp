#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "screensum/common.hpp"
#include "screensum/error.hpp"

namespace screensum {

struct Dialogue {
  std::string speaker;  // normalized
  std::string text;
  bool operator==(const Dialogue&) const = default;
};

struct Action {
  std::string text;
  bool operator==(const Action&) const = default;
};

using ScriptElement = std::variant<Action, Dialogue>;

struct Scene {
  int index = 0;
  std::string heading;
  std::vector<std::string> cast;  // normalized names from the cast attribute
  std::vector<ScriptElement> elements;

  // Concatenated action text, space separated.
  std::string description() const;

  bool operator==(const Scene&) const = default;
};

// Dense character ids assigned in order of first appearance.
class CharacterRegistry {
 public:
  int add(const std::string& normalized_name);  // returns id, existing or new
  int id_of(const std::string& normalized_name) const;  // -1 when absent
  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name_of(int id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const CharacterRegistry& other) const {
    return names_ == other.names_;
  }

 private:
  std::vector<std::string> names_;
  std::map<std::string, int> index_;
};

struct Screenplay {
  std::string id;
  std::string title;
  std::vector<Scene> scenes;
  CharacterRegistry characters;

  // The script as one whitespace-joined text: per scene the heading, then
  // each element in order (dialogues prefixed with the speaker name).
  std::string full_text() const;

  bool operator==(const Screenplay&) const = default;
};

enum class SummarySource { imdb, wikipedia, other };

const char* summary_source_name(SummarySource source);

struct ReferenceSummary {
  std::string screenplay_id;
  std::string text;
  SummarySource source = SummarySource::other;
};

// Uppercase, trim, collapse internal whitespace, strip trailing
// parenthetical qualifiers such as "(V.O.)" or "(CONT'D)".
std::string normalize_name(std::string_view raw);

// Collapse whitespace runs to single spaces and trim.
std::string normalize_whitespace(std::string_view text);

Screenplay parse_xml(std::string_view document);
Screenplay parse_plaintext(std::string_view document, std::string id = "",
                           std::string title = "");

std::string to_xml(const Screenplay& sp);
std::string to_json(const Screenplay& sp);
Screenplay screenplay_from_json(std::string_view json_text);

// Summary files hold one JSON object per line: {"id", "text", "source"}.
std::map<std::string, ReferenceSummary> parse_summaries(std::string_view jsonl);
std::map<std::string, ReferenceSummary> load_summaries(const std::string& path);

std::string read_file(const std::string& path);               // UnreadableFile
void write_file(const std::string& path, std::string_view);   // UnwritableFile

}  // namespace screensum
