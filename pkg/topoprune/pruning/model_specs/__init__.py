# Bundled model specs
