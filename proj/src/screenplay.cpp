#include "screensum/screenplay.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace screensum {

using nlohmann::json;

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::string normalize_name(std::string_view raw) {
  std::string s = normalize_whitespace(raw);
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  // Strip trailing parenthetical qualifiers, possibly several.
  for (;;) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
    if (s.empty() || s.back() != ')') break;
    size_t open = s.rfind('(');
    if (open == std::string::npos) break;
    s.erase(open);
  }
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

std::string Scene::description() const {
  std::string out;
  for (const auto& element : elements) {
    if (const auto* action = std::get_if<Action>(&element)) {
      if (action->text.empty()) continue;
      if (!out.empty()) out.push_back(' ');
      out += action->text;
    }
  }
  return out;
}

std::string Screenplay::full_text() const {
  std::string out;
  auto append = [&out](std::string_view piece) {
    if (piece.empty()) return;
    if (!out.empty()) out.push_back(' ');
    out += piece;
  };
  for (const auto& scene : scenes) {
    append(scene.heading);
    for (const auto& element : scene.elements) {
      if (const auto* action = std::get_if<Action>(&element)) {
        append(action->text);
      } else {
        const auto& d = std::get<Dialogue>(element);
        append(d.speaker);
        append(d.text);
      }
    }
  }
  return out;
}

int CharacterRegistry::add(const std::string& normalized_name) {
  auto it = index_.find(normalized_name);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(names_.size());
  names_.push_back(normalized_name);
  index_.emplace(normalized_name, id);
  return id;
}

int CharacterRegistry::id_of(const std::string& normalized_name) const {
  auto it = index_.find(normalized_name);
  return it == index_.end() ? -1 : it->second;
}

const char* summary_source_name(SummarySource source) {
  switch (source) {
    case SummarySource::imdb: return "imdb";
    case SummarySource::wikipedia: return "wikipedia";
    case SummarySource::other: return "other";
  }
  return "other";
}

// ---------------------------------------------------------------------------
// XML
// ---------------------------------------------------------------------------

namespace {

class XmlCursor {
 public:
  explicit XmlCursor(std::string_view text) : text_(text) {}

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  bool starts_with(std::string_view prefix) const {
    return text_.substr(pos_, prefix.size()) == prefix;
  }

  void advance(size_t n = 1) { pos_ += n; }

  void skip_ws() {
    while (!eof() && is_space(text_[pos_])) ++pos_;
  }

  void skip_misc() {
    // whitespace, comments, processing instructions
    for (;;) {
      skip_ws();
      if (starts_with("<!--")) {
        size_t end = text_.find("-->", pos_ + 4);
        if (end == std::string_view::npos)
          raise(ErrorCode::MalformedXml, "unterminated comment");
        pos_ = end + 3;
      } else if (starts_with("<?")) {
        size_t end = text_.find("?>", pos_ + 2);
        if (end == std::string_view::npos)
          raise(ErrorCode::MalformedXml, "unterminated processing instruction");
        pos_ = end + 2;
      } else {
        return;
      }
    }
  }

  std::string parse_name() {
    size_t start = pos_;
    while (!eof()) {
      char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
          c == ':' || c == '.') {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ == start) raise(ErrorCode::MalformedXml, "expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out.push_back(raw[i]);
        continue;
      }
      size_t semi = raw.find(';', i + 1);
      if (semi == std::string_view::npos)
        raise(ErrorCode::MalformedXml, "unterminated entity");
      std::string_view name = raw.substr(i + 1, semi - i - 1);
      if (name == "amp") out.push_back('&');
      else if (name == "lt") out.push_back('<');
      else if (name == "gt") out.push_back('>');
      else if (name == "quot") out.push_back('"');
      else if (name == "apos") out.push_back('\'');
      else if (!name.empty() && name[0] == '#') {
        int base = 10;
        std::string digits(name.substr(1));
        if (!digits.empty() && (digits[0] == 'x' || digits[0] == 'X')) {
          base = 16;
          digits.erase(0, 1);
        }
        if (digits.empty())
          raise(ErrorCode::MalformedXml, "bad character reference");
        long code = 0;
        try {
          code = std::stol(digits, nullptr, base);
        } catch (const std::exception&) {
          raise(ErrorCode::MalformedXml, "bad character reference");
        }
        append_utf8(out, code);
      } else {
        raise(ErrorCode::MalformedXml, "unknown entity &" + std::string(name) + ";");
      }
      i = semi;
    }
    return out;
  }

  // Parses attributes up to (but not consuming) '>' or '/>'.
  std::map<std::string, std::string> parse_attributes() {
    std::map<std::string, std::string> attrs;
    for (;;) {
      skip_ws();
      if (eof()) raise(ErrorCode::MalformedXml, "unterminated tag");
      char c = peek();
      if (c == '>' || c == '/') return attrs;
      std::string name = parse_name();
      skip_ws();
      if (eof() || peek() != '=')
        raise(ErrorCode::MalformedXml, "attribute without value");
      advance();
      skip_ws();
      if (eof() || (peek() != '"' && peek() != '\''))
        raise(ErrorCode::MalformedXml, "attribute value must be quoted");
      char quote = peek();
      advance();
      size_t start = pos_;
      while (!eof() && peek() != quote) advance();
      if (eof()) raise(ErrorCode::MalformedXml, "unterminated attribute value");
      std::string value = decode_entities(text_.substr(start, pos_ - start));
      advance();
      if (!attrs.emplace(name, std::move(value)).second)
        raise(ErrorCode::MalformedXml, "duplicate attribute " + name);
    }
  }

  // Reads text content until the next '<'.
  std::string parse_text() {
    size_t start = pos_;
    while (!eof() && peek() != '<') advance();
    return decode_entities(text_.substr(start, pos_ - start));
  }

 private:
  static void append_utf8(std::string& out, long code) {
    if (code < 0 || code > 0x10FFFF)
      raise(ErrorCode::MalformedXml, "character reference out of range");
    uint32_t cp = static_cast<uint32_t>(code);
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  std::string_view text_;
  size_t pos_ = 0;
};

struct RawElement {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::string text;                 // character data, leaf elements only
  std::vector<RawElement> children;
};

// Parses one element; cursor must sit on '<'. Leaf-vs-container handling is
// generic; schema checks happen later.
RawElement parse_element(XmlCursor& cur, int depth) {
  if (depth > 8) raise(ErrorCode::MalformedXml, "element nesting too deep");
  if (cur.eof() || cur.peek() != '<')
    raise(ErrorCode::MalformedXml, "expected an element");
  cur.advance();
  RawElement element;
  element.name = cur.parse_name();
  element.attrs = cur.parse_attributes();
  if (cur.starts_with("/")) {
    cur.advance();
    if (cur.eof() || cur.peek() != '>')
      raise(ErrorCode::MalformedXml, "malformed self-closing tag");
    cur.advance();
    return element;
  }
  if (cur.eof() || cur.peek() != '>')
    raise(ErrorCode::MalformedXml, "malformed start tag");
  cur.advance();
  for (;;) {
    std::string text = cur.parse_text();
    if (!normalize_whitespace(text).empty()) element.text += text;
    if (cur.eof()) raise(ErrorCode::MalformedXml, "unterminated element <" + element.name + ">");
    if (cur.starts_with("</")) {
      cur.advance(2);
      std::string close = cur.parse_name();
      if (close != element.name)
        raise(ErrorCode::MalformedXml, "mismatched closing tag </" + close + ">");
      cur.skip_ws();
      if (cur.eof() || cur.peek() != '>')
        raise(ErrorCode::MalformedXml, "malformed closing tag");
      cur.advance();
      return element;
    }
    if (cur.starts_with("<!--")) {
      cur.skip_misc();
      continue;
    }
    element.children.push_back(parse_element(cur, depth + 1));
  }
}

void require_attrs(const RawElement& element,
                   std::initializer_list<const char*> allowed) {
  for (const auto& [name, value] : element.attrs) {
    bool ok = false;
    for (const char* a : allowed) {
      if (name == a) { ok = true; break; }
    }
    if (!ok)
      raise(ErrorCode::SchemaViolation,
            "unknown attribute '" + name + "' on <" + element.name + ">");
  }
}

std::vector<std::string> split_cast(const std::string& raw) {
  std::vector<std::string> out;
  std::string current;
  for (char c : raw) {
    if (c == ',') {
      std::string name = normalize_name(current);
      if (!name.empty()) out.push_back(std::move(name));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  std::string name = normalize_name(current);
  if (!name.empty()) out.push_back(std::move(name));
  return out;
}

void register_characters(Screenplay& sp) {
  for (auto& scene : sp.scenes) {
    for (const auto& name : scene.cast) sp.characters.add(name);
    for (const auto& element : scene.elements) {
      if (const auto* d = std::get_if<Dialogue>(&element))
        sp.characters.add(d->speaker);
    }
  }
}

}  // namespace

Screenplay parse_xml(std::string_view document) {
  // strip UTF-8 BOM
  if (document.substr(0, 3) == "\xEF\xBB\xBF") document.remove_prefix(3);
  XmlCursor cur(document);
  cur.skip_misc();
  RawElement root = parse_element(cur, 0);
  cur.skip_misc();
  if (!cur.eof())
    raise(ErrorCode::MalformedXml, "content after the root element");

  if (root.name != "screenplay")
    raise(ErrorCode::SchemaViolation, "root element must be <screenplay>");
  require_attrs(root, {"id", "title"});
  if (!normalize_whitespace(root.text).empty())
    raise(ErrorCode::SchemaViolation, "<screenplay> cannot contain text");

  Screenplay sp;
  if (auto it = root.attrs.find("id"); it != root.attrs.end())
    sp.id = normalize_whitespace(it->second);
  if (auto it = root.attrs.find("title"); it != root.attrs.end())
    sp.title = normalize_whitespace(it->second);

  for (const auto& scene_el : root.children) {
    if (scene_el.name != "scene")
      raise(ErrorCode::SchemaViolation, "unknown element <" + scene_el.name + ">");
    require_attrs(scene_el, {"heading", "cast"});
    if (!normalize_whitespace(scene_el.text).empty())
      raise(ErrorCode::SchemaViolation, "<scene> cannot contain bare text");

    Scene scene;
    scene.index = static_cast<int>(sp.scenes.size());
    if (auto it = scene_el.attrs.find("heading"); it != scene_el.attrs.end())
      scene.heading = normalize_whitespace(it->second);
    if (auto it = scene_el.attrs.find("cast"); it != scene_el.attrs.end())
      scene.cast = split_cast(it->second);

    for (const auto& child : scene_el.children) {
      if (!child.children.empty())
        raise(ErrorCode::SchemaViolation,
              "<" + child.name + "> cannot contain elements");
      if (child.name == "action") {
        require_attrs(child, {});
        scene.elements.push_back(Action{normalize_whitespace(child.text)});
      } else if (child.name == "dialogue") {
        require_attrs(child, {"speaker"});
        auto it = child.attrs.find("speaker");
        if (it == child.attrs.end())
          raise(ErrorCode::SchemaViolation, "<dialogue> without a speaker");
        std::string speaker = normalize_name(it->second);
        if (speaker.empty())
          raise(ErrorCode::SchemaViolation, "<dialogue> speaker is empty");
        std::string text = normalize_whitespace(child.text);
        if (text.empty())
          raise(ErrorCode::SchemaViolation, "<dialogue> text is empty");
        scene.elements.push_back(Dialogue{std::move(speaker), std::move(text)});
      } else {
        raise(ErrorCode::SchemaViolation, "unknown element <" + child.name + ">");
      }
    }
    sp.scenes.push_back(std::move(scene));
  }

  if (sp.scenes.empty())
    raise(ErrorCode::EmptyScreenplay, "screenplay has no scenes");
  register_characters(sp);
  return sp;
}

// ---------------------------------------------------------------------------
// Plain text
// ---------------------------------------------------------------------------

namespace {

bool is_all_caps(const std::string& line) {
  bool has_alpha = false;
  for (char c : line) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::islower(u)) return false;
    if (std::isupper(u)) has_alpha = true;
  }
  return has_alpha;
}

bool is_scene_prefix(const std::string& line) {
  return line.rfind("INT.", 0) == 0 || line.rfind("EXT.", 0) == 0;
}

}  // namespace

Screenplay parse_plaintext(std::string_view document, std::string id,
                           std::string title) {
  std::vector<std::string> lines;
  {
    std::string current;
    for (char c : document) {
      if (c == '\n') {
        lines.push_back(normalize_whitespace(current));
        current.clear();
      } else if (c != '\r') {
        current.push_back(c);
      }
    }
    lines.push_back(normalize_whitespace(current));
  }

  Screenplay sp;
  sp.id = std::move(id);
  sp.title = std::move(title);

  auto current_scene = [&sp]() -> Scene& {
    if (sp.scenes.empty()) {
      Scene synthetic;
      synthetic.index = 0;
      sp.scenes.push_back(std::move(synthetic));
    }
    return sp.scenes.back();
  };
  auto open_scene = [&sp](std::string heading) {
    Scene scene;
    scene.index = static_cast<int>(sp.scenes.size());
    scene.heading = std::move(heading);
    sp.scenes.push_back(std::move(scene));
  };

  constexpr size_t kMaxCueLength = 40;
  size_t i = 0;
  const size_t n = lines.size();
  while (i < n) {
    const std::string& line = lines[i];
    if (line.empty()) {
      ++i;
      continue;
    }
    bool next_blank = (i + 1 >= n) ? false : lines[i + 1].empty();
    bool next_text = (i + 1 < n) && !lines[i + 1].empty();
    if (is_scene_prefix(line) || (is_all_caps(line) && next_blank)) {
      open_scene(line);
      ++i;
      continue;
    }
    if (is_all_caps(line) && line.size() <= kMaxCueLength && next_text &&
        !is_scene_prefix(lines[i + 1])) {
      std::string speaker = normalize_name(line);
      if (!speaker.empty()) {
        std::string text;
        size_t j = i + 1;
        while (j < n && !lines[j].empty() && !is_scene_prefix(lines[j]) &&
               !is_all_caps(lines[j])) {
          if (!text.empty()) text.push_back(' ');
          text += lines[j];
          ++j;
        }
        if (!text.empty()) {
          current_scene().elements.push_back(
              Dialogue{std::move(speaker), std::move(text)});
          i = j;
          continue;
        }
      }
    }
    current_scene().elements.push_back(Action{line});
    ++i;
  }

  if (sp.scenes.empty())
    raise(ErrorCode::EmptyScreenplay, "document is empty");
  register_characters(sp);
  return sp;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

std::string xml_escape(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string to_xml(const Screenplay& sp) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<screenplay id=\"" << xml_escape(sp.id) << "\" title=\""
      << xml_escape(sp.title) << "\">\n";
  for (const auto& scene : sp.scenes) {
    out << "  <scene heading=\"" << xml_escape(scene.heading) << "\"";
    if (!scene.cast.empty()) {
      out << " cast=\"";
      for (size_t i = 0; i < scene.cast.size(); ++i) {
        if (i) out << ",";
        out << xml_escape(scene.cast[i]);
      }
      out << "\"";
    }
    if (scene.elements.empty()) {
      out << "/>\n";
      continue;
    }
    out << ">\n";
    for (const auto& element : scene.elements) {
      if (const auto* action = std::get_if<Action>(&element)) {
        out << "    <action>" << xml_escape(action->text) << "</action>\n";
      } else {
        const auto& d = std::get<Dialogue>(element);
        out << "    <dialogue speaker=\"" << xml_escape(d.speaker) << "\">"
            << xml_escape(d.text) << "</dialogue>\n";
      }
    }
    out << "  </scene>\n";
  }
  out << "</screenplay>\n";
  return out.str();
}

std::string to_json(const Screenplay& sp) {
  json scenes = json::array();
  for (const auto& scene : sp.scenes) {
    json elements = json::array();
    for (const auto& element : scene.elements) {
      if (const auto* action = std::get_if<Action>(&element)) {
        elements.push_back({{"type", "action"}, {"text", action->text}});
      } else {
        const auto& d = std::get<Dialogue>(element);
        elements.push_back(
            {{"type", "dialogue"}, {"speaker", d.speaker}, {"text", d.text}});
      }
    }
    json s = {{"index", scene.index},
              {"heading", scene.heading},
              {"elements", std::move(elements)}};
    if (!scene.cast.empty()) s["cast"] = scene.cast;
    scenes.push_back(std::move(s));
  }
  json characters = json::array();
  for (int id = 0; id < sp.characters.size(); ++id) {
    characters.push_back({{"id", id}, {"name", sp.characters.name_of(id)}});
  }
  json doc = {{"schema_version", 1},
              {"id", sp.id},
              {"title", sp.title},
              {"scenes", std::move(scenes)},
              {"characters", std::move(characters)}};
  return doc.dump();
}

Screenplay screenplay_from_json(std::string_view json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    raise(ErrorCode::SchemaViolation, "screenplay JSON is not an object");
  Screenplay sp;
  try {
    sp.id = doc.value("id", "");
    sp.title = doc.value("title", "");
    if (!doc.contains("scenes") || !doc["scenes"].is_array())
      raise(ErrorCode::SchemaViolation, "screenplay JSON lacks scenes");
    for (const auto& s : doc["scenes"]) {
      Scene scene;
      scene.index = static_cast<int>(sp.scenes.size());
      scene.heading = normalize_whitespace(s.value("heading", ""));
      if (s.contains("cast")) {
        for (const auto& name : s["cast"]) {
          std::string normalized = normalize_name(name.get<std::string>());
          if (!normalized.empty()) scene.cast.push_back(std::move(normalized));
        }
      }
      for (const auto& e : s.value("elements", json::array())) {
        std::string type = e.value("type", "");
        if (type == "action") {
          scene.elements.push_back(
              Action{normalize_whitespace(e.value("text", ""))});
        } else if (type == "dialogue") {
          std::string speaker = normalize_name(e.value("speaker", ""));
          std::string text = normalize_whitespace(e.value("text", ""));
          if (speaker.empty())
            raise(ErrorCode::SchemaViolation, "dialogue speaker is empty");
          if (text.empty())
            raise(ErrorCode::SchemaViolation, "dialogue text is empty");
          scene.elements.push_back(Dialogue{std::move(speaker), std::move(text)});
        } else {
          raise(ErrorCode::SchemaViolation, "unknown element type '" + type + "'");
        }
      }
      sp.scenes.push_back(std::move(scene));
    }
  } catch (const json::exception& e) {
    raise(ErrorCode::SchemaViolation, std::string("screenplay JSON: ") + e.what());
  }
  if (sp.scenes.empty())
    raise(ErrorCode::EmptyScreenplay, "screenplay has no scenes");
  register_characters(sp);
  return sp;
}

// ---------------------------------------------------------------------------
// Reference summaries
// ---------------------------------------------------------------------------

std::map<std::string, ReferenceSummary> parse_summaries(std::string_view jsonl) {
  std::map<std::string, ReferenceSummary> out;
  size_t start = 0;
  int line_no = 0;
  while (start <= jsonl.size()) {
    size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;

    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object())
      raise(ErrorCode::MissingField,
            "line " + std::to_string(line_no) + ": not a JSON object");
    if (!record.contains("id") || !record["id"].is_string() ||
        record["id"].get<std::string>().empty())
      raise(ErrorCode::MissingField,
            "line " + std::to_string(line_no) + ": missing \"id\"");
    if (!record.contains("text") || !record["text"].is_string() ||
        record["text"].get<std::string>().empty())
      raise(ErrorCode::MissingField,
            "line " + std::to_string(line_no) + ": missing \"text\"");
    if (!record.contains("source") || !record["source"].is_string())
      raise(ErrorCode::MissingField,
            "line " + std::to_string(line_no) + ": missing \"source\"");

    ReferenceSummary summary;
    summary.screenplay_id = record["id"].get<std::string>();
    summary.text = record["text"].get<std::string>();
    std::string source = record["source"].get<std::string>();
    if (source == "imdb") summary.source = SummarySource::imdb;
    else if (source == "wikipedia") summary.source = SummarySource::wikipedia;
    else summary.source = SummarySource::other;

    auto [it, inserted] = out.emplace(summary.screenplay_id, std::move(summary));
    if (!inserted)
      raise(ErrorCode::DuplicateId, "duplicate summary id '" + it->first + "'");
  }
  return out;
}

std::map<std::string, ReferenceSummary> load_summaries(const std::string& path) {
  return parse_summaries(read_file(path));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::UnreadableFile, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) raise(ErrorCode::UnreadableFile, "cannot read " + path);
  return buffer.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::UnwritableFile, "cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorCode::UnwritableFile, "cannot write " + path);
}

}  // namespace screensum
