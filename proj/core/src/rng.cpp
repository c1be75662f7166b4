#include "abrlab/rng.hpp"
