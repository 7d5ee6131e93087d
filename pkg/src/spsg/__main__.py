import sys

from spsg.cli import main

sys.exit(main())
