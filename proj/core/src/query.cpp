#include "hardmine/query.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>

#include "hardmine/errors.hpp"

namespace hardmine {
namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class TokenKind {
  ident, number, string, lparen, rparen, comma,
  plus, minus, star, greater, greater_equal, less, less_equal,
  equal_equal, equal, end
};

struct Token {
  TokenKind kind = TokenKind::end;
  std::size_t pos = 0;
  std::string text;     // identifier / quoted-string payload
  double value = 0.0;   // number payload
};

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::vector<Token> lex(const std::string& text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token tok;
    tok.pos = i;
    switch (c) {
      case '(': tok.kind = TokenKind::lparen; ++i; break;
      case ')': tok.kind = TokenKind::rparen; ++i; break;
      case ',': tok.kind = TokenKind::comma; ++i; break;
      case '+': tok.kind = TokenKind::plus; ++i; break;
      case '-': tok.kind = TokenKind::minus; ++i; break;
      case '*': tok.kind = TokenKind::star; ++i; break;
      case '>':
        if (i + 1 < n && text[i + 1] == '=') { tok.kind = TokenKind::greater_equal; i += 2; }
        else { tok.kind = TokenKind::greater; ++i; }
        break;
      case '<':
        if (i + 1 < n && text[i + 1] == '=') { tok.kind = TokenKind::less_equal; i += 2; }
        else { tok.kind = TokenKind::less; ++i; }
        break;
      case '=':
        if (i + 1 < n && text[i + 1] == '=') { tok.kind = TokenKind::equal_equal; i += 2; }
        else { tok.kind = TokenKind::equal; ++i; }
        break;
      case '\'':
      case '"': {
        const char quote = c;
        std::size_t j = i + 1;
        while (j < n && text[j] != quote) ++j;
        if (j >= n) throw ParseError(i, "unterminated quoted name");
        tok.kind = TokenKind::string;
        tok.text = text.substr(i + 1, j - i - 1);
        i = j + 1;
        break;
      }
      default:
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
          const char* begin = text.c_str() + i;
          char* endp = nullptr;
          tok.value = std::strtod(begin, &endp);
          if (endp == begin) throw ParseError(i, "malformed number");
          tok.kind = TokenKind::number;
          i += static_cast<std::size_t>(endp - begin);
        } else if (is_ident_start(c)) {
          std::size_t j = i;
          while (j < n && is_ident_char(text[j])) ++j;
          tok.kind = TokenKind::ident;
          tok.text = text.substr(i, j - i);
          i = j;
        } else {
          throw ParseError(i, std::string("unexpected character '") + c + "'");
        }
    }
    tokens.push_back(std::move(tok));
  }
  Token end_tok;
  end_tok.kind = TokenKind::end;
  end_tok.pos = n;
  tokens.push_back(std::move(end_tok));
  return tokens;
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
  const std::vector<Token>& tokens;
  std::size_t at = 0;

  const Token& peek() const { return tokens[at]; }
  Token take() { return tokens[at++]; }

  void expect(TokenKind kind, const char* what) {
    if (peek().kind != kind) {
      throw ParseError(peek().pos, std::string("expected ") + what);
    }
    ++at;
  }

  QueryExprPtr parse_compare() {
    QueryExprPtr lhs = parse_sum();
    const TokenKind k = peek().kind;
    std::optional<CompareOp> op;
    switch (k) {
      case TokenKind::greater: op = CompareOp::greater; break;
      case TokenKind::greater_equal: op = CompareOp::greater_equal; break;
      case TokenKind::less: op = CompareOp::less; break;
      case TokenKind::less_equal: op = CompareOp::less_equal; break;
      case TokenKind::equal_equal: op = CompareOp::equal; break;
      default: break;
    }
    if (!op.has_value()) return lhs;
    ++at;
    QueryExprPtr rhs = parse_sum();
    switch (peek().kind) {
      case TokenKind::greater:
      case TokenKind::greater_equal:
      case TokenKind::less:
      case TokenKind::less_equal:
      case TokenKind::equal_equal:
        throw ParseError(peek().pos, "comparisons cannot be chained; add parentheses");
      default:
        break;
    }
    auto node = std::make_shared<QueryExpr>();
    node->node = Compare{*op, std::move(lhs), std::move(rhs)};
    return node;
  }

  QueryExprPtr parse_sum() {
    QueryExprPtr lhs = parse_product();
    while (peek().kind == TokenKind::plus || peek().kind == TokenKind::minus) {
      const BinaryOp op =
          take().kind == TokenKind::plus ? BinaryOp::add : BinaryOp::subtract;
      QueryExprPtr rhs = parse_product();
      auto node = std::make_shared<QueryExpr>();
      node->node = Binary{op, std::move(lhs), std::move(rhs)};
      lhs = std::move(node);
    }
    return lhs;
  }

  QueryExprPtr parse_product() {
    QueryExprPtr lhs = parse_factor();
    while (peek().kind == TokenKind::star) {
      ++at;
      QueryExprPtr rhs = parse_factor();
      auto node = std::make_shared<QueryExpr>();
      node->node = Binary{BinaryOp::multiply, std::move(lhs), std::move(rhs)};
      lhs = std::move(node);
    }
    return lhs;
  }

  QueryExprPtr parse_factor() {
    const Token& tok = peek();
    switch (tok.kind) {
      case TokenKind::number: {
        auto node = std::make_shared<QueryExpr>();
        node->node = Scalar{take().value};
        return node;
      }
      case TokenKind::minus: {
        ++at;
        if (peek().kind != TokenKind::number) {
          throw ParseError(peek().pos, "expected a number after unary '-'");
        }
        auto node = std::make_shared<QueryExpr>();
        node->node = Scalar{-take().value};
        return node;
      }
      case TokenKind::lparen: {
        ++at;
        QueryExprPtr inner = parse_compare();
        expect(TokenKind::rparen, "')'");
        return inner;
      }
      case TokenKind::ident:
        return parse_base();
      default:
        throw ParseError(tok.pos, "expected a term");
    }
  }

  QueryExprPtr parse_base() {
    const Token agg_tok = take();
    const std::string agg_name = to_lower(agg_tok.text);
    Aggregator agg;
    if (agg_name == "total") {
      agg = Aggregator::total;
    } else if (agg_name == "pixeladj") {
      agg = Aggregator::pixeladj;
    } else if (agg_name == "occaware") {
      agg = Aggregator::occaware;
    } else {
      throw ParseError(agg_tok.pos, "unknown aggregator '" + agg_tok.text + "'");
    }
    expect(TokenKind::lparen, "'('");
    if (peek().kind != TokenKind::ident) {
      throw ParseError(peek().pos, "expected an error set (fp, fn or false)");
    }
    const Token eset_tok = take();
    const std::string eset_name = to_lower(eset_tok.text);
    ErrorSetKind eset;
    if (eset_name == "fp") {
      eset = ErrorSetKind::fp;
    } else if (eset_name == "fn") {
      eset = ErrorSetKind::fn;
    } else if (eset_name == "false") {
      eset = ErrorSetKind::all_errors;
    } else {
      throw ParseError(eset_tok.pos, "unknown error set '" + eset_tok.text + "'");
    }
    BaseTerm term;
    term.agg = agg;
    term.eset = eset;
    if (peek().kind == TokenKind::comma) {
      ++at;
      if (peek().kind != TokenKind::ident || to_lower(peek().text) != "class") {
        throw ParseError(peek().pos, "expected 'class' after ','");
      }
      ++at;
      expect(TokenKind::equal, "'=' after 'class'");
      if (peek().kind == TokenKind::ident || peek().kind == TokenKind::string) {
        term.class_name = take().text;
      } else {
        throw ParseError(peek().pos, "expected a class name");
      }
    }
    expect(TokenKind::rparen, "')'");
    auto node = std::make_shared<QueryExpr>();
    node->node = std::move(term);
    return node;
  }
};

// ---------------------------------------------------------------------------
// Pretty printer

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool is_plain_identifier(const std::string& s) {
  if (s.empty() || !is_ident_start(s[0])) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return is_ident_char(c); });
}

const char* aggregator_name(Aggregator a) {
  switch (a) {
    case Aggregator::total: return "total";
    case Aggregator::pixeladj: return "pixeladj";
    case Aggregator::occaware: return "occaware";
  }
  return "?";
}

const char* eset_name_of(ErrorSetKind k) {
  switch (k) {
    case ErrorSetKind::fp: return "fp";
    case ErrorSetKind::fn: return "fn";
    case ErrorSetKind::all_errors: return "false";
  }
  return "?";
}

int precedence_of(const QueryExpr& e) {
  if (std::holds_alternative<Compare>(e.node)) return 0;
  if (const auto* b = std::get_if<Binary>(&e.node)) {
    return b->op == BinaryOp::multiply ? 2 : 1;
  }
  return 3;
}

// Parenthesize a child when its precedence is lower than the parent's, or
// equal on the right-hand side: the printer must re-parse to the same tree,
// and the grammar is left-associative.
void print_node(const QueryExpr& e, int parent_prec, bool right_child, std::string& out) {
  const int prec = precedence_of(e);
  const bool parens = prec < parent_prec || (prec == parent_prec && right_child);
  if (parens) out += '(';
  if (const auto* s = std::get_if<Scalar>(&e.node)) {
    out += format_number(s->value);
  } else if (const auto* t = std::get_if<BaseTerm>(&e.node)) {
    out += aggregator_name(t->agg);
    out += '(';
    out += eset_name_of(t->eset);
    if (t->class_name.has_value()) {
      out += ", class=";
      if (is_plain_identifier(*t->class_name)) {
        out += *t->class_name;
      } else if (t->class_name->find('\'') == std::string::npos) {
        out += '\'';
        out += *t->class_name;
        out += '\'';
      } else {
        out += '"';
        out += *t->class_name;
        out += '"';
      }
    }
    out += ')';
  } else if (const auto* b = std::get_if<Binary>(&e.node)) {
    print_node(*b->lhs, prec, false, out);
    switch (b->op) {
      case BinaryOp::add: out += " + "; break;
      case BinaryOp::subtract: out += " - "; break;
      case BinaryOp::multiply: out += " * "; break;
    }
    print_node(*b->rhs, prec, true, out);
  } else if (const auto* c = std::get_if<Compare>(&e.node)) {
    // Both operands are full sums; only a nested comparison needs parentheses.
    print_node(*c->lhs, prec + 1, false, out);
    switch (c->op) {
      case CompareOp::greater: out += " > "; break;
      case CompareOp::greater_equal: out += " >= "; break;
      case CompareOp::less: out += " < "; break;
      case CompareOp::less_equal: out += " <= "; break;
      case CompareOp::equal: out += " == "; break;
    }
    print_node(*c->rhs, prec + 1, false, out);
  }
  if (parens) out += ')';
}

QueryExprPtr parse_tokens(const std::vector<Token>& tokens, std::size_t start) {
  Parser parser{tokens, start};
  QueryExprPtr expr = parser.parse_compare();
  if (parser.peek().kind != TokenKind::end) {
    throw ParseError(parser.peek().pos, "unexpected trailing input");
  }
  return expr;
}

const std::set<std::string> reserved_words = {
    "total", "pixeladj", "occaware", "fp", "fn", "false", "class"};

std::string sanitize_name(const std::string& text) {
  std::string out;
  bool pending_sep = false;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (pending_sep && !out.empty()) out += '_';
      pending_sep = false;
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      pending_sep = true;
    }
  }
  if (out.empty()) out = "q";
  return out;
}

}  // namespace

QueryExprPtr parse_query(const std::string& text) {
  return parse_tokens(lex(text), 0);
}

std::string pretty_print(const QueryExpr& expr) {
  std::string out;
  print_node(expr, 0, false, out);
  return out;
}

std::string pretty_print(const QueryExprPtr& expr) {
  return pretty_print(*expr);
}

QueryExprPtr bind_query(const QueryExprPtr& expr, const ClassTable& classes) {
  auto node = std::make_shared<QueryExpr>();
  if (const auto* t = std::get_if<BaseTerm>(&expr->node)) {
    BaseTerm bound = *t;
    if (bound.class_name.has_value()) {
      const std::optional<ClassId> id = classes.id_of(*bound.class_name);
      if (!id.has_value()) {
        throw BindError("unknown class '" + *bound.class_name + "'");
      }
      bound.bound_class = id;
    }
    node->node = std::move(bound);
  } else if (const auto* s = std::get_if<Scalar>(&expr->node)) {
    node->node = *s;
  } else if (const auto* b = std::get_if<Binary>(&expr->node)) {
    node->node = Binary{b->op, bind_query(b->lhs, classes), bind_query(b->rhs, classes)};
  } else if (const auto* c = std::get_if<Compare>(&expr->node)) {
    node->node = Compare{c->op, bind_query(c->lhs, classes), bind_query(c->rhs, classes)};
  }
  return node;
}

QueryInputs make_query_inputs(const std::vector<Detection>& detections,
                              const std::vector<GroundTruthBox>& ground_truths,
                              const Matching& matching, double image_area) {
  QueryInputs inputs;
  inputs.image_area = image_area;
  inputs.fp = error_set(matching, ErrorSetKind::fp, detections, ground_truths);
  inputs.fn = error_set(matching, ErrorSetKind::fn, detections, ground_truths);
  inputs.tp_boxes.reserve(matching.tp.size());
  for (const TpPair& pair : matching.tp) {
    inputs.tp_boxes.push_back(detections[pair.det_index].box);
  }
  return inputs;
}

namespace {

double eval_base(const BaseTerm& term, const QueryInputs& inputs) {
  if (term.class_name.has_value() && !term.bound_class.has_value()) {
    throw EvalError("query has an unresolved class filter; bind it to a schema first");
  }
  const auto matches_filter = [&](const ErrorElement& e) {
    return !term.bound_class.has_value() || e.class_id == *term.bound_class;
  };
  double acc = 0.0;
  const auto accumulate = [&](const ErrorElement& e) {
    switch (term.agg) {
      case Aggregator::total:
        acc += 1.0;
        break;
      case Aggregator::pixeladj: {
        if (inputs.image_area <= 0.0) {
          throw EvalError("pixeladj needs image dimensions, which are unknown here");
        }
        acc += e.box.area() / inputs.image_area;
        break;
      }
      case Aggregator::occaware: {
        const double a = e.box.area();
        if (a <= 0.0) break;  // zero-area boxes contribute nothing
        for (const BoundingBox& tp : inputs.tp_boxes) {
          acc += intersection_area(e.box, tp) / a;
        }
        break;
      }
    }
  };
  if (term.eset == ErrorSetKind::fp || term.eset == ErrorSetKind::all_errors) {
    for (const ErrorElement& e : inputs.fp) {
      if (matches_filter(e)) accumulate(e);
    }
  }
  if (term.eset == ErrorSetKind::fn || term.eset == ErrorSetKind::all_errors) {
    for (const ErrorElement& e : inputs.fn) {
      if (matches_filter(e)) accumulate(e);
    }
  }
  return acc;
}

}  // namespace

double eval_query(const QueryExpr& expr, const QueryInputs& inputs) {
  if (const auto* s = std::get_if<Scalar>(&expr.node)) {
    return s->value;
  }
  if (const auto* t = std::get_if<BaseTerm>(&expr.node)) {
    return eval_base(*t, inputs);
  }
  if (const auto* b = std::get_if<Binary>(&expr.node)) {
    const double lhs = eval_query(*b->lhs, inputs);
    const double rhs = eval_query(*b->rhs, inputs);
    switch (b->op) {
      case BinaryOp::add: return lhs + rhs;
      case BinaryOp::subtract: return lhs - rhs;
      case BinaryOp::multiply: return lhs * rhs;
    }
  }
  const auto& c = std::get<Compare>(expr.node);
  const double lhs = eval_query(*c.lhs, inputs);
  const double rhs = eval_query(*c.rhs, inputs);
  bool truth = false;
  switch (c.op) {
    case CompareOp::greater: truth = lhs > rhs; break;
    case CompareOp::greater_equal: truth = lhs >= rhs; break;
    case CompareOp::less: truth = lhs < rhs; break;
    case CompareOp::less_equal: truth = lhs <= rhs; break;
    case CompareOp::equal: truth = lhs == rhs; break;
  }
  return truth ? 1.0 : 0.0;
}

double eval_query(const QueryExprPtr& expr, const QueryInputs& inputs) {
  return eval_query(*expr, inputs);
}

std::vector<NamedQuery> load_query_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open query file '" + path + "'");
  }
  std::vector<NamedQuery> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<Token> tokens;
    try {
      tokens = lex(line);
    } catch (const ParseError& e) {
      throw ConfigError("query file '" + path + "' line " + std::to_string(line_no) +
                        ": " + e.what());
    }
    if (tokens.size() < 3 || tokens[0].kind != TokenKind::ident ||
        tokens[1].kind != TokenKind::equal) {
      throw ConfigError("query file '" + path + "' line " + std::to_string(line_no) +
                        ": expected 'name = expression'");
    }
    const std::string name = tokens[0].text;
    if (reserved_words.count(to_lower(name)) != 0) {
      throw ConfigError("query file '" + path + "' line " + std::to_string(line_no) +
                        ": query name '" + name + "' is reserved");
    }
    if (!seen.insert(name).second) {
      throw ConfigError("query file '" + path + "' line " + std::to_string(line_no) +
                        ": duplicate query name '" + name + "'");
    }
    NamedQuery q;
    q.name = name;
    try {
      q.expr = parse_tokens(tokens, 2);
    } catch (const ParseError& e) {
      throw ConfigError("query file '" + path + "' line " + std::to_string(line_no) +
                        ": " + e.what());
    }
    const std::size_t expr_start = tokens[2].pos;
    q.text = line.substr(expr_start);
    while (!q.text.empty() && (q.text.back() == '\r' || q.text.back() == ' ' ||
                               q.text.back() == '\t')) {
      q.text.pop_back();
    }
    out.push_back(std::move(q));
  }
  if (out.empty()) {
    throw ConfigError("query file '" + path + "' contains no queries");
  }
  return out;
}

std::vector<NamedQuery> name_queries(const std::vector<std::string>& texts) {
  std::vector<NamedQuery> out;
  std::set<std::string> seen;
  for (const std::string& text : texts) {
    NamedQuery q;
    q.text = text;
    q.expr = parse_query(text);
    std::string base = sanitize_name(text);
    std::string name = base;
    int suffix = 2;
    while (!seen.insert(name).second) {
      name = base + "_" + std::to_string(suffix++);
    }
    q.name = std::move(name);
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<NamedQuery> standard_queries() {
  static const std::vector<std::string> texts = {
      "total(fp)",    "total(fn)",    "total(false)",
      "pixeladj(fp)", "pixeladj(fn)", "pixeladj(false)",
      "occaware(fp)", "occaware(fn)", "occaware(false)",
  };
  return name_queries(texts);
}

}  // namespace hardmine
