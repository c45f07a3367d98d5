# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]
