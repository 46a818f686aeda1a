// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/ast.hpp"

namespace specbridge {

/// Tags every Var as a bound variable (de Bruijn level) or a reference to an
/// earlier top-level declaration, and every named type as a synonym
/// reference or a shape variable. Rejects unbound identifiers, forward
/// references and duplicate declarations (ScopeError).
Program resolveNames(const Program& program);

} // namespace specbridge

namespace specbridge {

/// Resolves a free-standing expression against every declaration of `program`.
ExprPtr resolveExpression(const Program& program, const ExprPtr& e);

} // namespace specbridge
