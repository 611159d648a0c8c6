# SPDX-FileCopyrightText: 2024-present cellwebb <cellwebb@users.noreply.github.com>
#
# SPDX-License-Identifier: MIT
