""" cfamc.utils: logging and type coercion helpers """
