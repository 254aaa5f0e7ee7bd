#
# 8888888b.   .d8888b.  888b    888  .d8888b.  8888888 888b     d888 
# 888  "Y88b d88P  Y88b 8888b   888 d88P  Y88b   888   8888b   d8888 
# 888    888 888    888 88888b  888 Y88b.        888   88888b.d88888 
# 888    888 888        888Y88b 888  "Y888b.     888   888Y88888P888 
# 888    888 888        888 Y88b888     "Y88b.   888   888 Y888P 888 
# 888    888 888    888 888  Y88888       "888   888   888  Y8P  888 
# 888  .d88P Y88b  d88P 888   Y8888 Y88b  d88P   888   888   "   888 
# 8888888P"   "Y8888P"  888    Y888  "Y8888P"  8888888 888       888 
#
# Copyright (c) 2025, Abe Mishler
# Licensed under the Universal Permissive License v 1.0
# as shown at https://oss.oracle.com/licenses/upl/. 
# 

"""
DCNSIM - Decentralized Cubic Newton simulator
Decentralized cubic-regularized Newton methods over simulated networks
"""

__version__ = "1.0.0"
__author__ = "Abe"
