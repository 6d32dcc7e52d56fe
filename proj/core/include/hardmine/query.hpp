#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hardmine/dataset.hpp"
#include "hardmine/matching.hpp"

namespace hardmine {

/// How an error set is reduced to a number.
///  - total:    cardinality of the set.
///  - pixeladj: sum of box areas divided by the image area.
///  - occaware: for each error box, its fraction covered by true-positive
///              boxes, summed over the set.
enum class Aggregator { total, pixeladj, occaware };

enum class BinaryOp { add, subtract, multiply };
enum class CompareOp { greater, greater_equal, less, less_equal, equal };

struct QueryExpr;
/// Expression nodes are immutable and shared; a parsed query can be evaluated
/// concurrently from any number of threads.
using QueryExprPtr = std::shared_ptr<const QueryExpr>;

/// agg(eset) or agg(eset, class=name). The class filter narrows the error set
/// only; the true-positive boxes seen by occaware stay unfiltered.
struct BaseTerm {
  Aggregator agg = Aggregator::total;
  ErrorSetKind eset = ErrorSetKind::fp;
  std::optional<std::string> class_name;
  std::optional<ClassId> bound_class;  // filled in by bind_query
};

struct Scalar {
  double value = 0.0;
};

struct Binary {
  BinaryOp op = BinaryOp::add;
  QueryExprPtr lhs;
  QueryExprPtr rhs;
};

/// Comparisons produce 0/1 and sit at the lowest precedence; they cannot be
/// chained without parentheses.
struct Compare {
  CompareOp op = CompareOp::greater;
  QueryExprPtr lhs;
  QueryExprPtr rhs;
};

struct QueryExpr {
  std::variant<BaseTerm, Scalar, Binary, Compare> node;
};

/// Parse query text. Keywords are case-insensitive and whitespace is free.
/// Grammar (EBNF):
///   query   := compare
///   compare := sum [ ('>' | '>=' | '<' | '<=' | '==') sum ]
///   sum     := product { ('+' | '-') product }
///   product := factor { '*' factor }
///   factor  := number | '-' number | base | '(' query ')'
///   base    := agg '(' eset [ ',' 'class' '=' name ] ')'
///   agg     := 'total' | 'pixeladj' | 'occaware'
///   eset    := 'fp' | 'fn' | 'false'
///   name    := identifier | quoted string
/// Throws ParseError with the offending position.
QueryExprPtr parse_query(const std::string& text);

/// Canonical textual form; parse(pretty_print(e)) has the same structure as e,
/// and pretty_print is a fixed point of parse followed by pretty_print.
std::string pretty_print(const QueryExpr& expr);
std::string pretty_print(const QueryExprPtr& expr);

/// Resolve class-filter names against a schema. Throws BindError for names the
/// schema does not know.
QueryExprPtr bind_query(const QueryExprPtr& expr, const ClassTable& classes);

/// Everything a query needs from one image: the error sets of a matching plus
/// the surviving true-positive boxes and the image area.
struct QueryInputs {
  double image_area = 0.0;  ///< 0 when the image size is unknown
  std::vector<ErrorElement> fp;
  std::vector<ErrorElement> fn;
  std::vector<BoundingBox> tp_boxes;  ///< detection-side boxes of the tp pairs
};

/// Assemble QueryInputs from a matching.
QueryInputs make_query_inputs(const std::vector<Detection>& detections,
                              const std::vector<GroundTruthBox>& ground_truths,
                              const Matching& matching, double image_area);

/// Evaluate a bound query. Throws EvalError when a pixeladj term is evaluated
/// without a known image area or when an unbound class filter is reached.
double eval_query(const QueryExpr& expr, const QueryInputs& inputs);
double eval_query(const QueryExprPtr& expr, const QueryInputs& inputs);

/// A query together with the name used for it in reports and file names.
struct NamedQuery {
  std::string name;
  std::string text;
  QueryExprPtr expr;
};

/// Parse a query file: one `name = expression` per line; blank lines and lines
/// starting with '#' are skipped. Names must be unique identifiers.
std::vector<NamedQuery> load_query_file(const std::string& path);

/// Wrap raw query strings into named queries; names are sanitized from the
/// text (non-alphanumerics collapse to '_') and deduplicated with suffixes.
std::vector<NamedQuery> name_queries(const std::vector<std::string>& texts);

/// The nine standard hardness queries: every aggregator crossed with every
/// error set.
std::vector<NamedQuery> standard_queries();

}  // namespace hardmine
