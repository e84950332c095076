#include "osnlab/graphml.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "osnlab/error.hpp"

namespace osnlab {

namespace {

struct XmlElement {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<XmlElement> children;
  std::size_t line = 0;

  const std::string* attr(const std::string& key) const {
    for (const auto& [k, v] : attrs)
      if (k == key) return &v;
    return nullptr;
  }
};

/// Minimal non-validating XML reader covering the GraphML subset this
/// project emits: prolog, comments, elements with quoted attributes,
/// character data (ignored) and the five standard entities.
class XmlReader {
 public:
  XmlReader(std::string_view text, std::string source)
      : text_(text), source_(std::move(source)) {}

  XmlElement parse_document() {
    skip_misc();
    if (!peek_is("<")) fail("expected root element");
    XmlElement root = parse_element();
    skip_misc();
    if (pos_ != text_.size()) fail("trailing content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(source_, line_, "malformed XML: " + message);
  }

  bool eof() const { return pos_ >= text_.size(); }

  char cur() const { return text_[pos_]; }

  void advance() {
    if (text_[pos_] == '\n') ++line_;
    ++pos_;
  }

  bool peek_is(std::string_view s) const {
    return text_.substr(pos_, s.size()) == s;
  }

  void expect(std::string_view s) {
    if (!peek_is(s)) fail("expected '" + std::string(s) + "'");
    for (std::size_t i = 0; i < s.size(); ++i) advance();
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(cur()))) advance();
  }

  // Whitespace, comments, <?...?> and <!...> declarations between elements.
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (peek_is("<!--")) {
        skip_until("-->");
      } else if (peek_is("<?")) {
        skip_until("?>");
      } else if (peek_is("<!")) {
        skip_until(">");
      } else {
        return;
      }
    }
  }

  void skip_until(std::string_view terminator) {
    while (!eof() && !peek_is(terminator)) advance();
    if (eof()) fail("unterminated construct");
    for (std::size_t i = 0; i < terminator.size(); ++i) advance();
  }

  std::string parse_name() {
    std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(cur())) ||
                      cur() == '_' || cur() == '-' || cur() == ':' ||
                      cur() == '.'))
      advance();
    if (pos_ == start) fail("expected name");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out.push_back(raw[i]);
        continue;
      }
      auto semi = raw.find(';', i);
      if (semi == std::string_view::npos) fail("unterminated entity");
      std::string_view ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "amp") out.push_back('&');
      else if (ent == "lt") out.push_back('<');
      else if (ent == "gt") out.push_back('>');
      else if (ent == "quot") out.push_back('"');
      else if (ent == "apos") out.push_back('\'');
      else if (!ent.empty() && ent[0] == '#') {
        int base = 10;
        std::string digits(ent.substr(1));
        if (!digits.empty() && (digits[0] == 'x' || digits[0] == 'X')) {
          base = 16;
          digits.erase(0, 1);
        }
        char* end = nullptr;
        long code = std::strtol(digits.c_str(), &end, base);
        if (end != digits.c_str() + digits.size() || code < 0 || code > 127)
          fail("unsupported character reference &" + std::string(ent) + ";");
        out.push_back(static_cast<char>(code));
      } else {
        fail("unknown entity &" + std::string(ent) + ";");
      }
      i = semi;
    }
    return out;
  }

  XmlElement parse_element() {
    expect("<");
    XmlElement element;
    element.line = line_;
    element.name = parse_name();
    for (;;) {
      skip_ws();
      if (eof()) fail("unterminated tag <" + element.name + ">");
      if (peek_is("/>")) {
        expect("/>");
        return element;
      }
      if (peek_is(">")) {
        expect(">");
        parse_content(element);
        return element;
      }
      std::string key = parse_name();
      skip_ws();
      expect("=");
      skip_ws();
      if (eof() || (cur() != '"' && cur() != '\'')) fail("expected quote");
      char quote = cur();
      advance();
      std::size_t start = pos_;
      while (!eof() && cur() != quote) {
        if (cur() == '<') fail("'<' in attribute value");
        advance();
      }
      if (eof()) fail("unterminated attribute value");
      std::string value = decode_entities(text_.substr(start, pos_ - start));
      advance();  // closing quote
      for (const auto& [k, v] : element.attrs)
        if (k == key) fail("duplicate attribute '" + key + "'");
      element.attrs.emplace_back(std::move(key), std::move(value));
    }
  }

  void parse_content(XmlElement& element) {
    for (;;) {
      // Character data is ignored; only markup matters here.
      while (!eof() && cur() != '<') advance();
      if (eof()) fail("unterminated element <" + element.name + ">");
      if (peek_is("<!--")) {
        skip_until("-->");
        continue;
      }
      if (peek_is("</")) {
        expect("</");
        std::string name = parse_name();
        if (name != element.name)
          fail("mismatched close tag </" + name + "> for <" + element.name +
               ">");
        skip_ws();
        expect(">");
        return;
      }
      element.children.push_back(parse_element());
    }
  }

  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

NodeId parse_graphml_id(const std::string& value, const std::string& source,
                        std::size_t line) {
  if (value.empty()) throw ParseError(source, line, "empty node id");
  errno = 0;
  char* end = nullptr;
  NodeId id = std::strtoull(value.c_str(), &end, 10);
  if (errno != 0 || end != value.c_str() + value.size())
    throw ParseError(source, line, "non-numeric node id '" + value + "'");
  return id;
}

}  // namespace

std::string export_graphml(const SocialGraph& g) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n";
  out << "  <graph edgedefault=\"undirected\">\n";
  for (NodeId v : g.nodes()) out << "    <node id=\"" << v << "\"/>\n";
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    NodeId u = g.node_at(i);
    for (NodeId v : g.neighbors_at(i)) {
      if (u < v)
        out << "    <edge source=\"" << u << "\" target=\"" << v << "\"/>\n";
    }
  }
  out << "  </graph>\n";
  out << "</graphml>\n";
  return out.str();
}

SocialGraph import_graphml(std::string_view doc,
                           const std::string& source_name) {
  XmlReader reader(doc, source_name);
  XmlElement root = reader.parse_document();
  if (root.name != "graphml")
    throw ParseError(source_name, root.line,
                     "root element is <" + root.name + ">, expected <graphml>");

  const XmlElement* graph = nullptr;
  for (const XmlElement& child : root.children) {
    if (child.name != "graph") continue;  // key/desc metadata
    if (graph)
      throw ParseError(source_name, child.line, "multiple <graph> elements");
    graph = &child;
  }
  if (!graph)
    throw ParseError(source_name, root.line, "no <graph> element");

  const std::string* edgedefault = graph->attr("edgedefault");
  if (!edgedefault)
    throw ParseError(source_name, graph->line, "missing edgedefault");
  if (*edgedefault != "undirected")
    throw ParseError(source_name, graph->line,
                     "directed graphml not supported (edgedefault=\"" +
                     *edgedefault + "\")");

  SocialGraph::Builder builder;
  std::unordered_set<NodeId> declared;
  // Nodes must be declared before edges can reference them; collect first.
  for (const XmlElement& child : graph->children) {
    if (child.name != "node") continue;
    const std::string* id = child.attr("id");
    if (!id)
      throw ParseError(source_name, child.line, "<node> without id");
    NodeId v = parse_graphml_id(*id, source_name, child.line);
    if (!declared.insert(v).second)
      throw ParseError(source_name, child.line,
                       "duplicate node id " + std::to_string(v));
    builder.add_node(v);
  }
  for (const XmlElement& child : graph->children) {
    if (child.name != "edge") continue;
    const std::string* source = child.attr("source");
    const std::string* target = child.attr("target");
    if (!source || !target)
      throw ParseError(source_name, child.line,
                       "<edge> without source/target");
    NodeId u = parse_graphml_id(*source, source_name, child.line);
    NodeId v = parse_graphml_id(*target, source_name, child.line);
    for (NodeId endpoint : {u, v}) {
      if (declared.count(endpoint) == 0)
        throw ParseError(source_name, child.line,
                         "edge references unknown node " +
                         std::to_string(endpoint));
    }
    try {
      builder.add_edge(u, v);
    } catch (const SelfLoopError&) {
      throw ParseError(source_name, child.line,
                       "self-loop edge at node " + std::to_string(u));
    }
  }
  return builder.build();
}

void write_graphml(const SocialGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << export_graphml(g);
  if (!out.flush()) throw Error("write failed for " + path.string());
}

SocialGraph read_graphml(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return import_graphml(buf.str(), path.filename().string());
}

}  // namespace osnlab
