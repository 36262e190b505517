"""Entry point for python -m vnn."""

from vnn.cli import main

if __name__ == "__main__":
    main()
