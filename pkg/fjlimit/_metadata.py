"""Fork-join queue maximum waiting times with heavy-tailed dependent services: simulation and limit laws"""

__version__ = '0.3.0'

__author_name__, __author_email__ = 'Fork-Join Limits Developers', 'fjlimit@proton.me'
__maintainer_name__, __maintainer_email__ = 'Fork-Join Limits Developers', 'fjlimit@proton.me'

__author__ = f'{__author_name__} <{__author_email__}>'
__maintainer__ = __author__

if __name__ == '__github__':
    print(__version__)
