#pragma once

#include "hlearn/errors.hpp"
#include "hlearn/pauli.hpp"
#include "hlearn/random.hpp"
#include "hlearn/hamiltonian.hpp"
#include "hlearn/generators.hpp"
#include "hlearn/dense.hpp"
#include "hlearn/device.hpp"
#include "hlearn/shadows.hpp"
#include "hlearn/gl.hpp"
#include "hlearn/learner.hpp"
#include "hlearn/io.hpp"
#include "hlearn/bench.hpp"
#include "hlearn/verify.hpp"
