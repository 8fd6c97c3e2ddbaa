#include "gloss/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "gloss/error.hpp"
#include "gloss/text.hpp"

namespace gloss {
namespace {

// ---------------------------------------------------------------------------
// Lexing

struct Token {
  enum Kind { Word, String, Arrow, Equals, LBracket, RBracket, Comma };
  Kind kind;
  std::string text;
  int column;
};

struct LineError {
  int column;
  std::string message;
};

bool is_word_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '-' || c == '.' || c == ':' || c == '/' || c >= 0x80;
}

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    const int column = static_cast<int>(i) + 1;
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '#') {
      break;
    } else if (c == '"') {
      std::string value;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        char d = line[i++];
        if (d == '"') {
          closed = true;
          break;
        }
        if (d != '\\') {
          value += d;
          continue;
        }
        if (i >= line.size()) break;
        char e = line[i++];
        switch (e) {
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          case 'r': value += '\r'; break;
          case '"': value += '"'; break;
          case '\\': value += '\\'; break;
          default:
            throw LineError{static_cast<int>(i) - 1, std::string("unknown escape \\") + e};
        }
      }
      if (!closed) throw LineError{column, "unterminated string"};
      tokens.push_back({Token::String, std::move(value), column});
    } else if (c == '-' && i + 1 < line.size() && line[i + 1] == '>') {
      tokens.push_back({Token::Arrow, "->", column});
      i += 2;
    } else if (c == '=') {
      tokens.push_back({Token::Equals, "=", column});
      ++i;
    } else if (c == '[') {
      tokens.push_back({Token::LBracket, "[", column});
      ++i;
    } else if (c == ']') {
      tokens.push_back({Token::RBracket, "]", column});
      ++i;
    } else if (c == ',') {
      tokens.push_back({Token::Comma, ",", column});
      ++i;
    } else if (is_word_char(static_cast<unsigned char>(c))) {
      std::size_t start = i;
      while (i < line.size() && is_word_char(static_cast<unsigned char>(line[i])) &&
             !(line[i] == '-' && i + 1 < line.size() && line[i + 1] == '>')) {
        ++i;
      }
      tokens.push_back({Token::Word, std::string(line.substr(start, i - start)), column});
    } else {
      throw LineError{column, std::string("unexpected character '") + c + "'"};
    }
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Statements

struct Value {
  bool is_list = false;
  std::string scalar;
  std::vector<std::string> list;
  int column = 1;
};

struct Attrs {
  std::map<std::string, Value> values;
  std::map<std::string, int> key_columns;
};

struct HeaderStmt {
  std::string title;
  Attrs attrs;
};
struct MetaStmt {
  std::string key;
  std::string value;
};
struct NodeStmt {
  std::string id;
  int id_column;
  Attrs attrs;
};
struct EdgeStmt {
  std::optional<std::string> id;
  int id_column;
  std::string from;
  int from_column;
  std::string to;
  int to_column;
  Attrs attrs;
};

using Statement = std::variant<HeaderStmt, MetaStmt, NodeStmt, EdgeStmt>;

struct LineStatement {
  int line;
  Statement statement;
};

class LineParser {
 public:
  LineParser(std::vector<Token> tokens, int end_column)
      : tokens_(std::move(tokens)), end_column_(end_column) {}

  Statement parse() {
    const Token& keyword = next(Token::Word, "expected a statement keyword");
    if (keyword.text == "graph") {
      HeaderStmt h;
      h.title = next(Token::String, "expected a quoted graph title").text;
      h.attrs = attrs({"id", "mode", "start"});
      return h;
    }
    if (keyword.text == "meta") {
      MetaStmt m;
      m.key = identifier("expected a metadata key").text;
      next(Token::Equals, "expected '=' after metadata key");
      m.value = identifier("expected a metadata value").text;
      finish();
      return m;
    }
    if (keyword.text == "node") {
      NodeStmt n;
      const Token& id = identifier("expected a node id");
      n.id = id.text;
      n.id_column = id.column;
      n.attrs = attrs({"avatar", "desc", "terminal", "prov"});
      return n;
    }
    if (keyword.text == "edge") {
      EdgeStmt e;
      const Token& first = identifier("expected an edge id or source node");
      if (peek_kind(Token::Arrow)) {
        e.from = first.text;
        e.from_column = first.column;
        e.id_column = first.column;
      } else {
        e.id = first.text;
        e.id_column = first.column;
        const Token& from = identifier("expected a source node id");
        e.from = from.text;
        e.from_column = from.column;
      }
      next(Token::Arrow, "expected '->'");
      const Token& to = identifier("expected a target node id");
      e.to = to.text;
      e.to_column = to.column;
      e.attrs = attrs({"intent", "desc", "examples", "prov"});
      return e;
    }
    throw LineError{keyword.column, "unknown statement '" + keyword.text + "'"};
  }

  std::vector<ParseDiagnostic> warnings;

 private:
  bool peek_kind(Token::Kind kind) const { return pos_ < tokens_.size() && tokens_[pos_].kind == kind; }

  int here() const { return pos_ < tokens_.size() ? tokens_[pos_].column : end_column_; }

  const Token& next(Token::Kind kind, const char* message) {
    if (!peek_kind(kind)) throw LineError{here(), message};
    return tokens_[pos_++];
  }

  const Token& identifier(const char* message) {
    if (peek_kind(Token::Word) || peek_kind(Token::String)) return tokens_[pos_++];
    throw LineError{here(), message};
  }

  void finish() {
    if (pos_ < tokens_.size()) throw LineError{tokens_[pos_].column, "unexpected '" + tokens_[pos_].text + "'"};
  }

  Attrs attrs(std::initializer_list<std::string_view> known) {
    Attrs out;
    while (pos_ < tokens_.size()) {
      const Token& key = next(Token::Word, "expected key=value");
      next(Token::Equals, "expected '=' after attribute key");
      Value value;
      value.column = here();
      if (peek_kind(Token::LBracket)) {
        ++pos_;
        value.is_list = true;
        if (!peek_kind(Token::RBracket)) {
          while (true) {
            value.list.push_back(next(Token::String, "list items must be quoted strings").text);
            if (peek_kind(Token::Comma)) {
              ++pos_;
              continue;
            }
            break;
          }
        }
        next(Token::RBracket, "expected ']' to close the list");
      } else {
        value.scalar = identifier("expected a value after '='").text;
      }
      if (std::find(known.begin(), known.end(), key.text) == known.end()) {
        warnings.push_back({0, key.column, "unknown attribute '" + key.text + "' ignored",
                            Severity::Warning});
        continue;
      }
      if (out.values.count(key.text)) {
        warnings.push_back({0, key.column, "attribute '" + key.text + "' repeated; last one wins",
                            Severity::Warning});
      }
      out.key_columns[key.text] = key.column;
      out.values[key.text] = std::move(value);
    }
    return out;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int end_column_;
};

const Value* attr(const Attrs& attrs, const std::string& key) {
  auto it = attrs.values.find(key);
  return it == attrs.values.end() ? nullptr : &it->second;
}

std::string scalar_attr(const Attrs& attrs, const std::string& key) {
  const Value* v = attr(attrs, key);
  if (!v) return {};
  if (v->is_list) throw LineError{v->column, "'" + key + "' takes a single value, not a list"};
  return v->scalar;
}

bool bool_attr(const Attrs& attrs, const std::string& key) {
  const Value* v = attr(attrs, key);
  if (!v) return false;
  auto s = scalar_attr(attrs, key);
  if (s == "true") return true;
  if (s == "false") return false;
  throw LineError{v->column, "'" + key + "' must be true or false"};
}

Provenance prov_attr(const Attrs& attrs) {
  const Value* v = attr(attrs, "prov");
  if (!v) return Provenance::Authored;
  auto parsed = parse_provenance(scalar_attr(attrs, "prov"));
  if (!parsed) throw LineError{v->column, "prov must be authored, generated or template"};
  return *parsed;
}

// ---------------------------------------------------------------------------
// Rendering helpers

bool renders_bare(std::string_view s) {
  if (s.empty() || s.find("->") != std::string_view::npos) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return is_word_char(c); });
}

std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string atom(std::string_view s) { return renders_bare(s) ? std::string(s) : quoted(s); }

}  // namespace

ParseResult parse_dsl(std::string_view text) {
  ParseResult result;
  auto error = [&](int line, int column, std::string message) {
    result.diagnostics.push_back({line, std::max(column, 1), std::move(message), Severity::Error});
  };

  // Phase 1: one statement (or one diagnostic) per line.
  std::vector<LineStatement> statements;
  int line_no = 0;
  std::size_t offset = 0;
  while (offset <= text.size()) {
    auto newline = text.find('\n', offset);
    std::string_view line =
        text.substr(offset, newline == std::string_view::npos ? std::string_view::npos : newline - offset);
    ++line_no;
    offset = newline == std::string_view::npos ? text.size() + 1 : newline + 1;

    if (!text::is_valid_utf8(line)) {
      error(line_no, 1, "line is not valid UTF-8");
      continue;
    }
    try {
      auto tokens = tokenize(line);
      if (tokens.empty()) continue;
      LineParser parser(std::move(tokens), static_cast<int>(line.size()) + 1);
      Statement statement = parser.parse();
      for (auto w : parser.warnings) {
        w.line = line_no;
        result.diagnostics.push_back(std::move(w));
      }
      statements.push_back({line_no, std::move(statement)});
    } catch (const LineError& e) {
      error(line_no, e.column, e.message);
    }
  }

  // Phase 2: assemble the graph through the mutation API so every
  // graph-core invariant holds on the result.
  const HeaderStmt* header = nullptr;
  int header_line = 0;
  for (const auto& s : statements) {
    if (const auto* h = std::get_if<HeaderStmt>(&s.statement)) {
      if (header) {
        error(s.line, 1, "duplicate graph header (first one is on line " + std::to_string(header_line) + ")");
      } else {
        header = h;
        header_line = s.line;
      }
    }
  }

  NarrativeGraph graph;
  graph.title = "Untitled";
  graph.version = 1;
  std::optional<std::pair<std::string, int>> declared_start;
  if (!header) {
    error(1, 1, "missing graph header: expected `graph \"Title\" ...`");
  } else {
    try {
      if (header->title.empty()) throw LineError{1, "graph title must not be empty"};
      graph.title = header->title;
      auto id = scalar_attr(header->attrs, "id");
      graph.id = id.empty() ? fresh_graph_id() : GraphId(id);
      if (const Value* mode = attr(header->attrs, "mode")) {
        auto parsed = parse_dialogue_mode(scalar_attr(header->attrs, "mode"));
        if (!parsed) throw LineError{mode->column, "mode must be strict or flexible"};
        graph.mode = *parsed;
      }
      if (const Value* start = attr(header->attrs, "start")) {
        declared_start.emplace(scalar_attr(header->attrs, "start"), start->column);
      }
    } catch (const LineError& e) {
      error(header_line, e.column, e.message);
    }
  }

  std::set<std::string> explicit_ids;
  for (const auto& s : statements) {
    if (const auto* n = std::get_if<NodeStmt>(&s.statement)) explicit_ids.insert(n->id);
    if (const auto* e = std::get_if<EdgeStmt>(&s.statement); e && e->id) explicit_ids.insert(*e->id);
  }

  for (const auto& s : statements) {
    if (const auto* m = std::get_if<MetaStmt>(&s.statement)) {
      if (graph.metadata.count(m->key)) {
        result.diagnostics.push_back(
            {s.line, 1, "metadata key '" + m->key + "' repeated; last one wins", Severity::Warning});
      }
      graph.metadata[m->key] = m->value;
    }
  }

  for (const auto& s : statements) {
    const auto* n = std::get_if<NodeStmt>(&s.statement);
    if (!n) continue;
    try {
      SceneNode node;
      node.id = NodeId(n->id);
      node.avatar_utterance = scalar_attr(n->attrs, "avatar");
      if (node.avatar_utterance.empty()) {
        throw LineError{n->id_column, "node " + n->id + " needs a non-empty avatar=\"...\""};
      }
      node.description = scalar_attr(n->attrs, "desc");
      node.terminal = bool_attr(n->attrs, "terminal");
      node.provenance = prov_attr(n->attrs);
      graph = apply_mutation(graph, mutation::AddNode{std::move(node)});
    } catch (const LineError& e) {
      error(s.line, e.column, e.message);
    } catch (const Error& e) {
      error(s.line, n->id_column, e.what());
    }
  }

  if (declared_start) {
    if (!graph.find_node(NodeId(declared_start->first))) {
      error(header_line, declared_start->second,
            "start node '" + declared_start->first + "' is not declared");
    } else {
      graph = apply_mutation(graph, mutation::SetStart{NodeId(declared_start->first)});
    }
  }

  int auto_counter = 0;
  auto next_auto_id = [&] {
    std::string candidate;
    do {
      candidate = "e" + std::to_string(++auto_counter);
    } while (explicit_ids.count(candidate));
    return candidate;
  };

  for (const auto& s : statements) {
    const auto* e = std::get_if<EdgeStmt>(&s.statement);
    if (!e) continue;
    try {
      TransitionEdge edge;
      edge.id = EdgeId(e->id ? *e->id : next_auto_id());
      edge.from = NodeId(e->from);
      edge.to = NodeId(e->to);
      for (auto [id, column] : {std::pair{&e->from, e->from_column}, std::pair{&e->to, e->to_column}}) {
        if (!graph.find_node(NodeId(*id))) {
          throw LineError{column, "edge references undeclared node '" + *id + "'"};
        }
      }
      edge.intent.label = scalar_attr(e->attrs, "intent");
      if (edge.intent.label.empty()) throw LineError{e->id_column, "edge needs intent=<label>"};
      edge.intent.description = scalar_attr(e->attrs, "desc");
      if (const Value* examples = attr(e->attrs, "examples")) {
        if (!examples->is_list) throw LineError{examples->column, "examples must be a [\"...\"] list"};
        edge.intent.examples = examples->list;
      }
      edge.provenance = prov_attr(e->attrs);
      graph = apply_mutation(graph, mutation::AddEdge{std::move(edge)});
    } catch (const LineError& err) {
      error(s.line, err.column, err.message);
    } catch (const Error& err) {
      error(s.line, e->id_column, err.what());
    }
  }

  std::stable_sort(result.diagnostics.begin(), result.diagnostics.end(),
                   [](const ParseDiagnostic& a, const ParseDiagnostic& b) {
                     return std::tie(a.line, a.column) < std::tie(b.line, b.column);
                   });

  const bool failed = std::any_of(result.diagnostics.begin(), result.diagnostics.end(),
                                  [](const ParseDiagnostic& d) { return d.severity == Severity::Error; });
  if (!failed) {
    graph.version = 1;
    result.graph = std::move(graph);
  }
  return result;
}

std::string render_dsl(const NarrativeGraph& graph) {
  if (has_errors(validate(graph))) {
    throw Error(Errc::InvalidGraph, "graph " + graph.id.str() + " has error diagnostics");
  }
  std::ostringstream out;
  out << "graph " << quoted(graph.title) << " id=" << atom(graph.id.str())
      << " mode=" << to_string(graph.mode);
  if (!graph.start_node.empty()) out << " start=" << atom(graph.start_node.str());
  out << '\n';
  for (const auto& [key, value] : graph.metadata) out << "meta " << atom(key) << '=' << atom(value) << '\n';
  for (const auto& [id, node] : graph.nodes) {
    out << "node " << atom(id.str()) << " avatar=" << quoted(node.avatar_utterance);
    if (!node.description.empty()) out << " desc=" << quoted(node.description);
    out << " terminal=" << (node.terminal ? "true" : "false");
    if (node.provenance != Provenance::Authored) out << " prov=" << to_string(node.provenance);
    out << '\n';
  }
  for (const auto& edge : graph.edges) {
    out << "edge " << atom(edge.id.str()) << ' ' << atom(edge.from.str()) << " -> "
        << atom(edge.to.str()) << " intent=" << atom(edge.intent.label);
    if (!edge.intent.description.empty()) out << " desc=" << quoted(edge.intent.description);
    if (!edge.intent.examples.empty()) {
      out << " examples=[";
      for (std::size_t i = 0; i < edge.intent.examples.size(); ++i) {
        out << (i ? ", " : "") << quoted(edge.intent.examples[i]);
      }
      out << ']';
    }
    if (edge.provenance != Provenance::Authored) out << " prov=" << to_string(edge.provenance);
    out << '\n';
  }
  return out.str();
}

}  // namespace gloss
