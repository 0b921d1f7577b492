#include "podfed/quad.hpp"

#include <cctype>
#include <map>
#include <sstream>

namespace podfed {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
         c == '\v';
}

void check_iri(std::string_view v) {
  if (v.empty()) throw std::invalid_argument("IRI must be non-empty");
  for (char c : v) {
    if (is_space(c) || c == '<' || c == '>' || c == '"')
      throw std::invalid_argument("IRI contains an illegal character: " +
                                  std::string(v));
  }
}

bool is_label_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
         c == '.';
}

void check_label(std::string_view v) {
  if (v.empty() || v.back() == '.')
    throw std::invalid_argument("invalid blank node label: " + std::string(v));
  for (char c : v)
    if (!is_label_char(c))
      throw std::invalid_argument("invalid blank node label: " +
                                  std::string(v));
}

void check_language(std::string_view v) {
  if (v.empty()) throw std::invalid_argument("empty language tag");
  for (char c : v)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-')
      throw std::invalid_argument("invalid language tag: " + std::string(v));
}

void append_escaped(std::string& out, std::string_view lexical) {
  for (char c : lexical) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
}

// Token-level reader shared by the quad and pattern parsers.
class Cursor {
 public:
  Cursor(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }
  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(line_, message + " (column " + std::to_string(pos_ + 1) +
                                ")");
  }

  std::string read_iri() {
    ++pos_;  // '<'
    std::size_t end = text_.find('>', pos_);
    if (end == std::string_view::npos) fail("unterminated IRI");
    std::string value(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    try {
      check_iri(value);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    return value;
  }

  Term read_literal() {
    ++pos_;  // '"'
    std::string lexical;
    for (;;) {
      if (pos_ >= text_.size()) fail("unterminated literal");
      char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\n') fail("newline inside literal");
      if (c != '\\') {
        lexical += c;
        continue;
      }
      if (pos_ >= text_.size()) fail("dangling escape");
      char e = text_[pos_++];
      switch (e) {
        case '"': lexical += '"'; break;
        case '\\': lexical += '\\'; break;
        case 'n': lexical += '\n'; break;
        case 'r': lexical += '\r'; break;
        case 't': lexical += '\t'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
    std::string datatype;
    std::string language;
    if (peek() == '@') {
      ++pos_;
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '-'))
        ++pos_;
      language = std::string(text_.substr(start, pos_ - start));
      if (language.empty()) fail("empty language tag");
    } else if (text_.substr(pos_, 2) == "^^") {
      pos_ += 2;
      if (peek() != '<') fail("datatype must be an IRI");
      datatype = read_iri();
    }
    return Term::literal(std::move(lexical), std::move(datatype),
                         std::move(language));
  }

  std::string read_blank_label() {
    if (text_.substr(pos_, 2) != "_:") fail("expected a blank node label");
    pos_ += 2;
    std::size_t start = pos_;
    while (pos_ < text_.size() && is_label_char(text_[pos_])) ++pos_;
    // A trailing '.' belongs to the statement terminator.
    while (pos_ > start && text_[pos_ - 1] == '.') --pos_;
    if (pos_ == start) fail("empty blank node label");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string read_bare_token() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  bool consume(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

class BlankRenamer {
 public:
  std::string rename(const std::string& label) {
    auto [it, inserted] = names_.try_emplace(label, "");
    if (inserted) it->second = "b" + std::to_string(names_.size() - 1);
    return it->second;
  }

 private:
  std::map<std::string, std::string> names_;
};

Term read_data_term(Cursor& cur, BlankRenamer& blanks) {
  cur.skip_space();
  switch (cur.peek()) {
    case '<': return Term::iri(cur.read_iri());
    case '"': return cur.read_literal();
    case '_': return Term::blank(blanks.rename(cur.read_blank_label()));
    case '\0': cur.fail("unexpected end of statement");
    default: cur.fail(std::string("unexpected character '") + cur.peek() + "'");
  }
}

}  // namespace

Term Term::iri(std::string value) {
  check_iri(value);
  return Term(TermKind::kIri, std::move(value), {}, {});
}

Term Term::literal(std::string lexical, std::string datatype,
                   std::string language) {
  if (!datatype.empty() && !language.empty())
    throw std::invalid_argument(
        "literal cannot carry both a datatype and a language tag");
  if (!datatype.empty()) check_iri(datatype);
  if (!language.empty()) check_language(language);
  return Term(TermKind::kLiteral, std::move(lexical), std::move(datatype),
              std::move(language));
}

Term Term::blank(std::string label) {
  check_label(label);
  return Term(TermKind::kBlank, std::move(label), {}, {});
}

std::string_view component_name(Component c) {
  switch (c) {
    case Component::kSubject: return "subject";
    case Component::kPredicate: return "predicate";
    case Component::kObject: return "object";
    case Component::kGraph: return "graph";
  }
  return "?";
}

Quad Quad::make(Term subject, Term predicate, Term object, Term graph) {
  if (subject.is_literal())
    throw std::invalid_argument("literal in subject position");
  if (!predicate.is_iri())
    throw std::invalid_argument("predicate must be an IRI");
  if (!graph.is_iri()) throw std::invalid_argument("graph must be an IRI");
  return Quad{std::move(subject), std::move(predicate), std::move(object),
              std::move(graph)};
}

const Term& Quad::at(Component c) const {
  switch (c) {
    case Component::kSubject: return subject;
    case Component::kPredicate: return predicate;
    case Component::kObject: return object;
    case Component::kGraph: return graph;
  }
  throw std::out_of_range("component");
}

QuadPattern QuadPattern::all_variables() {
  return QuadPattern{{Variable{"s"}, Variable{"p"}, Variable{"o"},
                      Variable{"g"}}};
}

bool QuadPattern::is_all_variables() const {
  for (const auto& p : positions)
    if (std::holds_alternative<Term>(p)) return false;
  return true;
}

ParseError::ParseError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message),
      line_(line) {}

std::string canonical_bytes(const Term& t) {
  std::string out;
  switch (t.kind()) {
    case TermKind::kIri:
      out.reserve(t.value().size() + 2);
      out += '<';
      out += t.value();
      out += '>';
      break;
    case TermKind::kBlank:
      out = "_:" + t.value();
      break;
    case TermKind::kLiteral:
      out += '"';
      append_escaped(out, t.value());
      out += '"';
      if (!t.language().empty()) {
        out += '@';
        out += t.language();
      } else if (!t.datatype().empty()) {
        out += "^^<";
        out += t.datatype();
        out += '>';
      }
      break;
  }
  return out;
}

std::string serialize_nquads(const std::vector<Quad>& quads) {
  std::string out;
  for (const Quad& q : quads) {
    out += canonical_bytes(q.subject);
    out += ' ';
    out += canonical_bytes(q.predicate);
    out += ' ';
    out += canonical_bytes(q.object);
    out += ' ';
    out += canonical_bytes(q.graph);
    out += " .\n";
  }
  return out;
}

std::vector<Quad> parse_quads(std::string_view text) {
  std::vector<Quad> quads;
  BlankRenamer blanks;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;

    Cursor cur(line, line_no);
    if (cur.at_end() || cur.peek() == '#') {
      if (end == text.size()) break;
      continue;
    }
    // Several statements may share a line.
    while (!cur.at_end() && cur.peek() != '#') {
      std::vector<Term> terms;
      while (terms.size() < 4) {
        cur.skip_space();
        if (cur.peek() == '.') break;
        terms.push_back(read_data_term(cur, blanks));
      }
      cur.skip_space();
      if (!cur.consume('.')) cur.fail("expected '.' to end the statement");
      if (terms.size() < 3) cur.fail("statement needs at least three terms");
      if (terms.size() == 3) terms.push_back(Term::default_graph());
      if (terms[0].is_literal()) cur.fail("literal in subject position");
      if (!terms[1].is_iri()) cur.fail("predicate must be an IRI");
      if (!terms[3].is_iri()) cur.fail("graph must be an IRI");
      quads.push_back(Quad{std::move(terms[0]), std::move(terms[1]),
                           std::move(terms[2]), std::move(terms[3])});
    }
    if (end == text.size()) break;
  }
  return quads;
}

bool pattern_matches(const QuadPattern& p, const Quad& q) {
  std::map<std::string, const Term*> bindings;
  for (Component c : kComponents) {
    const Term& actual = q.at(c);
    if (const Term* ground = p.ground(c)) {
      if (*ground != actual) return false;
      continue;
    }
    const auto& var = std::get<Variable>(p.at(c));
    auto [it, inserted] = bindings.try_emplace(var.name, &actual);
    if (!inserted && *it->second != actual) return false;
  }
  return true;
}

QuadPattern parse_pattern(std::string_view text) {
  Cursor cur(text, 1);
  BlankRenamer unused;
  QuadPattern pattern = QuadPattern::all_variables();
  for (std::size_t i = 0; i < 4; ++i) {
    if (cur.at_end()) cur.fail("pattern needs four terms");
    PatternTerm term;
    switch (cur.peek()) {
      case '?': {
        std::string tok = cur.read_bare_token();
        if (tok.size() < 2) cur.fail("empty variable name");
        term = Variable{tok.substr(1)};
        break;
      }
      case '<': term = Term::iri(cur.read_iri()); break;
      case '"': term = cur.read_literal(); break;
      case '_': {
        std::string tok = cur.read_bare_token();
        if (tok == "_") {
          term = Term::default_graph();
        } else if (tok.starts_with("_:")) {
          try {
            term = Term::blank(tok.substr(2));
          } catch (const std::invalid_argument& e) {
            cur.fail(e.what());
          }
        } else {
          cur.fail("unexpected token " + tok);
        }
        break;
      }
      default: cur.fail("unexpected token " + cur.read_bare_token());
    }
    pattern.positions[i] = std::move(term);
  }
  if (!cur.at_end()) cur.fail("trailing input after four pattern terms");

  if (const Term* s = pattern.ground(Component::kSubject); s && s->is_literal())
    cur.fail("literal in subject position");
  if (const Term* p = pattern.ground(Component::kPredicate); p && !p->is_iri())
    cur.fail("predicate must be an IRI");
  if (const Term* g = pattern.ground(Component::kGraph); g && !g->is_iri())
    cur.fail("graph must be an IRI");
  return pattern;
}

std::string to_string(const QuadPattern& p) {
  std::ostringstream out;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i) out << ' ';
    if (const auto* t = std::get_if<Term>(&p.positions[i]))
      out << canonical_bytes(*t);
    else
      out << '?' << std::get<Variable>(p.positions[i]).name;
  }
  return out.str();
}

}  // namespace podfed
