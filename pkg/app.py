import sys

from green_complexity.pipeline.task import main

if __name__ == "__main__":
    sys.exit(main())
