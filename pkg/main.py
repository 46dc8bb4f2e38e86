import sys

from voicepd.main import main  # console entrypoint: python main.py <subcommand>

if __name__ == "__main__":
    sys.exit(main())
