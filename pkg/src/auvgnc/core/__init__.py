"""Hot numerical loops: compiled extension with a pure-Python twin."""
