#pragma once

#include <string>

#include "swarmk/diagram.hpp"
#include "swarmk/errors.hpp"

namespace swarmk {

struct ModelSource {
  std::string text;
  std::string origin = "<inline>";
};

/// Parses model-language text into a state diagram.
///
///   model  := stmt*
///   stmt   := "param" IDENT "=" expr
///           | "state" IDENT "=" expr
///           | "env" IDENT "=" expr
///           | "rate" "(" expr ")" ":" IDENT "->" IDENT effects?
///   effects:= ";" effect ("," effect)*      effect := IDENT ("+=" | "-=") expr
///
/// Whitespace and `#` comments are insignificant. Identifiers may be used
/// before their declaration. Throws ParseError (lexical, syntax or semantic)
/// carrying the line and column of the offending token.
StateDiagram parse_model(const ModelSource& src);

/// Parses a single expression (no name resolution).
Expr parse_expr(const std::string& text);

/// Reads a .mas file; the diagram is named after the file stem.
StateDiagram load_model_file(const std::string& path);

}  // namespace swarmk
