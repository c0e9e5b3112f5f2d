#ifndef SQO_SQO_HPP
#define SQO_SQO_HPP

#include "sqo/analysis.hpp"
#include "sqo/errors.hpp"
#include "sqo/optimizers.hpp"
#include "sqo/problem.hpp"
#include "sqo/querying.hpp"
#include "sqo/rng.hpp"

#endif  // SQO_SQO_HPP
