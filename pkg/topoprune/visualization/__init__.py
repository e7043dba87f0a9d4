# Shared color variables for visualizations
PRIMARY_COLOR = "#b8d232"  # green
SECONDARY_COLOR = "#231f20"    # dark gray
ACCENT_COLOR = "#3274d2"   # blue

DEFAULT_OUTPUT_DIR = "results/plots"
