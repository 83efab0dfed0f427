from photonet.cli import main

raise SystemExit(main())
