#include "gm/types.hpp"
