# Joint entity / event extraction package
