// SPDX-License-Identifier: Apache-2.0
//
// tbdris - transmissive beyond-diagonal RIS link optimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "matrix.hpp"
#include "eig.hpp"
#include "channel.hpp"
#include "noma.hpp"
#include "phase.hpp"
#include "optimizer.hpp"
#include "sim.hpp"
