#pragma once

#include "tam/affinity.hpp"
#include "tam/common.hpp"
#include "tam/ensemble.hpp"
#include "tam/eval.hpp"
#include "tam/graph.hpp"
#include "tam/inject.hpp"
#include "tam/lamnet.hpp"
#include "tam/nsgt.hpp"
#include "tam/rng.hpp"
#include "tam/synthetic.hpp"
