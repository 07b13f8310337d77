#pragma once

#include "blockric/blockmodel.hpp"
#include "blockric/eigclassify.hpp"
#include "blockric/errors.hpp"
#include "blockric/herglotz.hpp"
#include "blockric/io.hpp"
#include "blockric/matrix.hpp"
#include "blockric/numkernel.hpp"
#include "blockric/riccati.hpp"
#include "blockric/tolerance.hpp"
