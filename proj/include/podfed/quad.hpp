#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace podfed {

/// Graph IRI assigned to quads that carry no explicit graph term.
inline constexpr std::string_view kDefaultGraphIri = "urn:podfed:default-graph";

enum class TermKind { kIri, kLiteral, kBlank };

/// An RDF term. Immutable once constructed; the factories validate.
class Term {
 public:
  static Term iri(std::string value);
  /// At most one of `datatype` and `language` may be non-empty.
  static Term literal(std::string lexical, std::string datatype = {},
                      std::string language = {});
  /// `label` excludes the `_:` prefix.
  static Term blank(std::string label);
  static Term default_graph() { return iri(std::string(kDefaultGraphIri)); }

  TermKind kind() const { return kind_; }
  const std::string& value() const { return value_; }
  const std::string& datatype() const { return datatype_; }
  const std::string& language() const { return language_; }

  bool is_iri() const { return kind_ == TermKind::kIri; }
  bool is_literal() const { return kind_ == TermKind::kLiteral; }
  bool is_blank() const { return kind_ == TermKind::kBlank; }

  friend bool operator==(const Term&, const Term&) = default;
  friend std::strong_ordering operator<=>(const Term&, const Term&) = default;

 private:
  Term(TermKind kind, std::string value, std::string datatype,
       std::string language)
      : kind_(kind),
        value_(std::move(value)),
        datatype_(std::move(datatype)),
        language_(std::move(language)) {}

  TermKind kind_;
  std::string value_;
  std::string datatype_;
  std::string language_;
};

enum class Component : std::size_t { kSubject = 0, kPredicate, kObject, kGraph };

inline constexpr std::array<Component, 4> kComponents = {
    Component::kSubject, Component::kPredicate, Component::kObject,
    Component::kGraph};

std::string_view component_name(Component c);

struct Quad {
  Term subject;
  Term predicate;
  Term object;
  Term graph;

  /// Checks positional constraints (no literal subject, IRI predicate, IRI
  /// graph) and throws std::invalid_argument when violated.
  static Quad make(Term subject, Term predicate, Term object,
                   Term graph = Term::default_graph());

  const Term& at(Component c) const;

  friend bool operator==(const Quad&, const Quad&) = default;
  friend std::strong_ordering operator<=>(const Quad&, const Quad&) = default;
};

struct Variable {
  std::string name;
  friend bool operator==(const Variable&, const Variable&) = default;
};

using PatternTerm = std::variant<Variable, Term>;

struct QuadPattern {
  std::array<PatternTerm, 4> positions;

  static QuadPattern all_variables();

  const PatternTerm& at(Component c) const {
    return positions[static_cast<std::size_t>(c)];
  }
  /// The ground term at `c`, or nullptr for a variable.
  const Term* ground(Component c) const { return std::get_if<Term>(&at(c)); }
  bool is_all_variables() const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// N-Triples serialization of a single term. Injective over valid terms.
std::string canonical_bytes(const Term& t);

/// One `s p o g .` line per quad, newline-terminated.
std::string serialize_nquads(const std::vector<Quad>& quads);

/// Parses the supported N-Quads subset. Blank labels are document-scoped and
/// renamed to b0, b1, ... in order of first occurrence.
std::vector<Quad> parse_quads(std::string_view text);

bool pattern_matches(const QuadPattern& p, const Quad& q);

/// Parses four whitespace-separated pattern tokens: `?name` variables,
/// `<iri>`, `"literal"` (with optional `@lang` / `^^<dt>`), `_:label`, and
/// `_` for the default graph. Throws ParseError (line 1) on malformed input.
QuadPattern parse_pattern(std::string_view text);

std::string to_string(const QuadPattern& p);

}  // namespace podfed
