from src.main import run


def main():
    """Run the composa command line."""
    run()


if __name__ == "__main__":
    main()
