# Masked MLP oracle and training demo
